#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/hyperbucket.hpp"
#include "ckm/listgen.hpp"
#include "ckm/stability.hpp"
#include "ckm/stream.hpp"

namespace ckm {

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Dataset CSV: a header row naming the columns, then one point per row.
// Coordinate columns come first; optional `color` and `target` columns
// follow. A label cell may be written as `7` or `color=7`.
struct CsvLayout {
  std::size_t dim = 0;
  std::optional<std::size_t> color_col;
  std::optional<std::size_t> target_col;
  std::size_t columns = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvLayout parse_header(const std::string& line) {
  const auto cells = split_csv_line(line);
  CsvLayout l;
  l.columns = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == "color") {
      if (l.color_col) throw IoError("csv: duplicate color column");
      l.color_col = i;
    } else if (cells[i] == "target") {
      if (l.target_col) throw IoError("csv: duplicate target column");
      l.target_col = i;
    } else {
      if (l.color_col || l.target_col) throw IoError("csv: label columns must follow the coordinates");
      ++l.dim;
    }
  }
  if (l.dim == 0) throw IoError("csv: header declares no coordinate columns");
  return l;
}

inline std::int64_t parse_label(const std::string& cell, const char* name, std::size_t line_no) {
  std::string v = cell;
  const std::string prefix = std::string(name) + "=";
  if (v.rfind(prefix, 0) == 0) v = v.substr(prefix.size());
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw IoError("csv line " + std::to_string(line_no) + ": bad " + name + " value '" + cell + "'");
  }
}

inline StreamRecord parse_row(const std::string& line, const CsvLayout& l, std::size_t line_no) {
  const auto cells = split_csv_line(line);
  if (cells.size() != l.columns)
    throw IoError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(l.columns) + " cells");
  std::vector<double> coords;
  coords.reserve(l.dim);
  for (std::size_t i = 0; i < l.dim; ++i) {
    char* end = nullptr;
    const double v = std::strtod(cells[i].c_str(), &end);
    if (cells[i].empty() || *end != '\0' || !std::isfinite(v))
      throw IoError("csv line " + std::to_string(line_no) + ": bad coordinate '" + cells[i] + "'");
    coords.push_back(v);
  }
  StreamRecord r{Point(std::move(coords)), std::nullopt, std::nullopt};
  if (l.color_col) r.color = parse_label(cells[*l.color_col], "color", line_no);
  if (l.target_col) r.target = parse_label(cells[*l.target_col], "target", line_no);
  return r;
}

inline bool skip_line(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#';
}

}  // namespace detail

inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<CsvLayout> layout;
  Dataset d;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    if (!layout) {
      layout = detail::parse_header(line);
      if (layout->color_col) d.colors.emplace();
      if (layout->target_col) d.targets.emplace();
      continue;
    }
    auto rec = detail::parse_row(line, *layout, line_no);
    d.points.push_back(std::move(rec.point));
    if (rec.color) d.colors->push_back(*rec.color);
    if (rec.target) d.targets->push_back(*rec.target);
  }
  if (!layout) throw IoError("csv: missing header row");
  return d;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_dataset_csv(in);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
  d.validate();
  const std::size_t dim = d.empty() ? 1 : d.dim();
  for (std::size_t j = 0; j < dim; ++j) out << (j ? "," : "") << 'x' << j;
  if (d.colors) out << ",color";
  if (d.targets) out << ",target";
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) out << (j ? "," : "") << format_double(d.points[i][j]);
    if (d.colors) out << ',' << (*d.colors)[i];
    if (d.targets) out << ',' << (*d.targets)[i];
    out << '\n';
  }
}

inline void write_dataset_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_dataset_csv(out, d);
}

// Reads the file afresh on every pass.
class CsvFileStream final : public StreamSource {
 public:
  explicit CsvFileStream(std::string path) : path_(std::move(path)) {}

 private:
  class Cursor final : public StreamCursor {
   public:
    explicit Cursor(const std::string& path) : in_(path) {
      if (!in_) throw IoError("cannot open " + path);
    }
    std::optional<StreamRecord> next() override {
      std::string line;
      while (std::getline(in_, line)) {
        ++line_no_;
        if (detail::skip_line(line)) continue;
        if (!layout_) {
          layout_ = detail::parse_header(line);
          continue;
        }
        return detail::parse_row(line, *layout_, line_no_);
      }
      if (!layout_) throw IoError("csv: missing header row");
      return std::nullopt;
    }

   private:
    std::ifstream in_;
    std::optional<CsvLayout> layout_;
    std::size_t line_no_ = 0;
  };

  std::unique_ptr<StreamCursor> do_open() override { return std::make_unique<Cursor>(path_); }

  std::string path_;
};

// Assignment CSV: `point,center` rows (l rows per point for fault-tolerant
// solutions) followed by a `# cost=` summary line.
inline void write_assignment_csv(std::ostream& out, const Assignment& a) {
  out << "point,center\n";
  for (std::size_t i = 0; i < a.num_points(); ++i)
    for (std::size_t j : a.owners(i)) out << i << ',' << j << '\n';
  out << "# cost=" << format_double(a.cost) << '\n';
}

// Candidate CSV: one row per entry with repetition, t, d, the t centers
// row-major, and the multiset positions joined by ';'.
inline void write_candidates_csv(std::ostream& out, const CandidateList& list) {
  out << "entry,repetition,t,d,centers,positions\n";
  for (std::size_t e = 0; e < list.size(); ++e) {
    const auto& c = list.entries[e];
    out << e << ',' << list.provenance[e].repetition << ',' << c.size() << ',' << (c.empty() ? 0 : c[0].dim()) << ',';
    bool first = true;
    for (const auto& p : c.centers)
      for (double v : p.coords()) {
        out << (first ? "" : ";") << format_double(v);
        first = false;
      }
    out << ',';
    first = true;
    for (std::size_t pos : list.provenance[e].positions) {
      out << (first ? "" : ";") << pos;
      first = false;
    }
    out << '\n';
  }
}

using nlohmann::json;

// Non-finite values become null.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const CenterSet& c) {
  json arr = json::array();
  for (const auto& p : c.centers) arr.push_back(std::vector<double>(p.coords().begin(), p.coords().end()));
  return arr;
}

inline json to_json(const SpaceReport& r) {
  json passes = json::array();
  for (const auto& p : r.per_pass) passes.push_back({{"label", p.label}, {"peak_points", p.peak_points}, {"words", p.words}});
  return {{"passes", r.passes}, {"peak_points", r.peak_points}, {"words", r.words}, {"per_pass", passes}};
}

inline json to_json(const StabilityReport& r) {
  json w = json::array();
  for (const auto& x : r.witnesses) w.push_back({x.i, x.j, x.x});
  json out = {{"opt", json_number(r.opt)},
              {"beta_distributed_max", json_number(r.beta_distributed_max)},
              {"weak_deletion_gamma", json_number(r.weak_deletion_gamma)},
              {"witnesses", w}};
  out["irreducible_gamma"] = r.irreducible_gamma ? json_number(*r.irreducible_gamma) : json(nullptr);
  return out;
}

inline json to_json(const CompressedGraph& g) {
  json vs = json::array();
  for (const auto& v : g.vertices()) {
    json buckets = json::array();
    for (auto b : v.key.buckets) buckets.push_back(b == kZeroBucket ? json("zero") : json(b));
    json entry = {{"buckets", buckets}, {"multiplicity", v.multiplicity}, {"weights", v.weights}};
    if (v.key.label >= 0) entry["label"] = v.key.label;
    if (v.key.allowed_mask != ~std::uint64_t{0}) entry["allowed_mask"] = v.key.allowed_mask;
    vs.push_back(entry);
  }
  return {{"epsilon", g.options().epsilon}, {"centers", to_json(g.centers())}, {"vertices", vs}};
}

}  // namespace ckm

// ckm: command-line front end.
//
//   ckm gen       --kind gaussian|duplicate|colored|gap ... --out data.csv
//   ckm solve     --input data.csv --k 3 --seed 1 --out-dir out/
//   ckm stream    --input data.csv --k 3 --seed 1 --out-dir out/
//   ckm partition --input data.csv --centers centers.json --out-dir out/
//   ckm verify    --input data.csv [--beta b] [--weak-deletion g] [--irreducible g]
//
// Exit codes: 0 ok, 1 a requested stability check failed, 2 infeasible
// constraints, 3 validation, 4 I/O, 5 oracle limit.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ckm/ckm.hpp"

namespace {

using ckm::json;

constexpr int kExitCheckFailed = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;
constexpr int kExitOracle = 5;

struct VariantFlags {
  std::string name = "classical";
  std::optional<std::size_t> r;
  std::optional<std::size_t> l;
  std::optional<double> alpha;

  ckm::Variant build() const {
    if (name == "classical") return ckm::variant::Classical{};
    if (name == "chromatic") return ckm::variant::Chromatic{};
    if (name == "r_gather" || name == "r_capacity") {
      if (!r) throw ckm::InvalidArgument(name + " needs --r");
      if (name == "r_gather") return ckm::variant::RGather{*r};
      return ckm::variant::RCapacity{*r};
    }
    if (name == "fault_tolerant") {
      if (!l) throw ckm::InvalidArgument("fault_tolerant needs --l");
      return ckm::variant::FaultTolerant{*l};
    }
    if (name == "semi_supervised") {
      if (!alpha) throw ckm::InvalidArgument("semi_supervised needs --alpha");
      return ckm::variant::SemiSupervised{*alpha};
    }
    throw ckm::InvalidArgument("unknown variant " + name);
  }

  void add(CLI::App* app) {
    app->add_option("--variant", name, "classical|r_gather|r_capacity|chromatic|fault_tolerant|semi_supervised")
        ->check(CLI::IsMember(
            {"classical", "r_gather", "r_capacity", "chromatic", "fault_tolerant", "semi_supervised"}));
    app->add_option("--r", r, "r for r_gather / r_capacity")->check(CLI::PositiveNumber);
    app->add_option("--l", l, "l for fault_tolerant")->check(CLI::PositiveNumber);
    app->add_option("--alpha", alpha, "alpha for semi_supervised")->check(CLI::Range(0.0, 1.0));
  }
};

struct ListFlags {
  std::string preset = "desk";
  double epsilon = 0.5;
  double approx = 1.0;
  std::size_t eta = 8;
  std::size_t tau = 2;
  std::size_t reps = 4;
  std::size_t budget = 64;
  std::optional<std::size_t> copies;
  bool exhaustive = false;

  ckm::GoodCentersConfig build(std::size_t t) const {
    if (preset == "paper") return ckm::GoodCentersConfig::paper(t, epsilon, approx);
    auto cfg = ckm::GoodCentersConfig::desk(t, epsilon, eta, tau, reps, budget);
    cfg.alpha = approx;
    // Desk runs sample a handful of tuples, so seed copies default to one
    // subset's worth instead of ceil(128 t / eps).
    cfg.copies = copies.value_or(tau);
    cfg.exhaustive = exhaustive;
    return cfg;
  }

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "desk|paper")->check(CLI::IsMember({"desk", "paper"}));
    app->add_option("--epsilon", epsilon, "accuracy in (0, 1/2]");
    app->add_option("--approx", approx, "approximation factor of the seeding (>= 1)");
    app->add_option("--eta", eta, "samples per center per repetition (desk)");
    app->add_option("--tau", tau, "subset size (desk)");
    app->add_option("--reps", reps, "repetitions (desk)");
    app->add_option("--budget", budget, "random tuples per repetition (desk)");
    app->add_option("--copies", copies, "copies of each seed center in the multiset (desk; default tau)");
    app->add_flag("--exhaustive", exhaustive, "enumerate every tuple (desk)");
  }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ckm::IoError("cannot create " + dir + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ckm::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw ckm::IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_assignment(const std::filesystem::path& path, const ckm::Assignment& a) {
  std::ostringstream s;
  ckm::write_assignment_csv(s, a);
  write_text(path, s.str());
}

ckm::CenterSet read_centers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ckm::IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ckm::IoError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("centers")) j = j["centers"];
  if (!j.is_array() || j.empty()) throw ckm::InvalidArgument(path + ": expected a non-empty array of centers");
  ckm::CenterSet c;
  for (const auto& row : j) {
    if (!row.is_array()) throw ckm::InvalidArgument(path + ": each center must be an array of numbers");
    std::vector<double> coords;
    for (const auto& v : row) {
      if (!v.is_number()) throw ckm::InvalidArgument(path + ": non-numeric coordinate");
      coords.push_back(v.get<double>());
    }
    c.centers.emplace_back(std::move(coords));
  }
  return c;
}

ckm::Dataset load(const std::string& path) {
  auto d = ckm::read_dataset_csv(path);
  if (d.empty()) throw ckm::EmptyInput(path + ": no data rows");
  d.validate();
  return d;
}

// Checks the dataset carries the columns the variant needs.
void require_columns(const ckm::Dataset& d, const ckm::Variant& v) {
  if (std::holds_alternative<ckm::variant::Chromatic>(v) && !d.colors)
    throw ckm::InvalidArgument("chromatic needs a color column");
  if (std::holds_alternative<ckm::variant::SemiSupervised>(v) && !d.targets)
    throw ckm::InvalidArgument("semi_supervised needs a target column");
}

json base_summary(const std::string& command, const ckm::Variant& v, std::size_t k) {
  return {{"command", command}, {"variant", ckm::variant_name(v)}, {"k", k}};
}

// ---------------------------------------------------------------- solve

struct SolveFlags {
  std::string input;
  std::string out_dir;
  std::size_t k = 0;
  std::optional<std::uint64_t> seed;
  std::size_t oversample = 0;
  std::string select = "argmin";
  bool candidates = false;
  VariantFlags variant;
  ListFlags list;
};

int run_solve(const SolveFlags& f, std::size_t workers) {
  const auto v = f.variant.build();
  ckm::validate_variant(v, f.k);
  const auto cfg = f.list.build(f.k);
  cfg.validate();
  const auto data = load(f.input);
  require_columns(data, v);

  ckm::Rng rng(*f.seed);
  const auto mode = f.select == "ranges" ? ckm::SelectMode::ranges : ckm::SelectMode::argmin;
  const auto r = ckm::batch_pipeline(data, f.k, v, cfg, rng, f.oversample, workers, mode, f.list.epsilon);

  ensure_dir(f.out_dir);
  const std::filesystem::path dir(f.out_dir);
  json s = base_summary("solve", v, f.k);
  s["n"] = data.size();
  s["d"] = data.dim();
  s["seed"] = *f.seed;
  s["feasible"] = r.feasible;
  s["cost"] = ckm::json_number(r.cost);
  s["seed_cost"] = ckm::json_number(r.seed.cost);
  s["list_size"] = r.list_size;
  s["candidates"] = r.candidates;
  if (r.feasible) {
    s["winner"] = r.winner;
    s["centers"] = ckm::to_json(r.centers);
    write_json(dir / "centers.json", ckm::to_json(r.centers));
    write_assignment(dir / "assignment.csv", r.assignment);
  }
  if (f.candidates) {
    // Regenerate the list with the same seed discipline for the record.
    ckm::Rng again(*f.seed);
    ckm::Rng seed_rng(again());
    const auto seeds = ckm::d2_seed(data.points, std::span<const double>{}, f.k, f.oversample, seed_rng);
    const auto list = ckm::good_centers(data.points, seeds.centers, cfg, again, workers);
    std::ostringstream out;
    ckm::write_candidates_csv(out, list);
    write_text(dir / "candidates.csv", out.str());
  }
  write_json(dir / "summary.json", s);
  return r.feasible ? 0 : kExitInfeasible;
}

// ---------------------------------------------------------------- stream

struct StreamFlags {
  SolveFlags common;
  std::size_t chunk = 256;
  double bucket_epsilon = 0.1;
  bool remove_aspect = false;
};

int run_stream(const StreamFlags& f, std::size_t workers) {
  const auto& c = f.common;
  const auto v = c.variant.build();
  ckm::validate_variant(v, c.k);
  if (std::holds_alternative<ckm::variant::Chromatic>(v))
    throw ckm::InvalidArgument("stream does not support the chromatic variant");
  if (f.chunk < c.k) throw ckm::InvalidArgument("--chunk must be at least k");
  const auto cfg = c.list.build(c.k);
  cfg.validate();
  if (!std::filesystem::exists(c.input)) throw ckm::IoError("cannot open " + c.input);

  ckm::CsvFileStream src(c.input);
  ckm::Rng rng(*c.seed);
  ckm::PipelineOptions opt;
  opt.stream.chunk = f.chunk;
  opt.stream.oversample = c.oversample;
  opt.stream.workers = workers;
  opt.bucket_epsilon = f.bucket_epsilon;
  opt.remove_aspect = f.remove_aspect;
  opt.select = c.select == "ranges" ? ckm::SelectMode::ranges : ckm::SelectMode::argmin;
  const auto r = ckm::full_pipeline(src, c.k, v, cfg, rng, opt);

  ensure_dir(c.out_dir);
  const std::filesystem::path dir(c.out_dir);
  json s = base_summary("stream", v, c.k);
  s["n"] = r.seed.points_seen;
  s["seed"] = *c.seed;
  s["feasible"] = r.feasible;
  s["cost"] = ckm::json_number(r.cost);
  s["compressed_cost"] = ckm::json_number(r.compressed_cost);
  s["seed_cost"] = ckm::json_number(r.seed.cost);
  s["list_size"] = r.list_size;
  s["candidates"] = r.candidates;
  s["passes"] = src.passes_used();
  s["space"] = ckm::to_json(r.space);
  if (r.feasible) {
    s["winner"] = r.winner;
    s["centers"] = ckm::to_json(r.centers);
    write_json(dir / "centers.json", ckm::to_json(r.centers));
    write_assignment(dir / "assignment.csv", r.assignment);
  }
  write_json(dir / "space.json", ckm::to_json(r.space));
  write_json(dir / "summary.json", s);
  return r.feasible ? 0 : kExitInfeasible;
}

// ------------------------------------------------------------- partition

struct PartitionFlags {
  std::string input;
  std::string centers;
  std::string out_dir;
  VariantFlags variant;
  std::optional<double> bucket_epsilon;
};

int run_partition(const PartitionFlags& f) {
  const auto c = read_centers(f.centers);
  const auto v = f.variant.build();
  ckm::validate_variant(v, c.size());
  const auto data = load(f.input);
  require_columns(data, v);
  if (c[0].dim() != data.dim()) throw ckm::DimensionMismatch("centers and data differ in dimension");

  const auto out = ckm::partition_solve(data, c, v);
  ensure_dir(f.out_dir);
  const std::filesystem::path dir(f.out_dir);
  json s = base_summary("partition", v, c.size());
  s["n"] = data.size();
  s["feasible"] = out.feasible;
  s["cost"] = ckm::json_number(out.cost);
  s["fixed_cost"] = out.feasible ? json(out.fixed_cost) : json(nullptr);
  if (out.perm) s["perm"] = *out.perm;
  if (out.feasible) write_assignment(dir / "assignment.csv", out.assignment);
  if (f.bucket_epsilon) {
    ckm::BucketingOptions b;
    b.epsilon = *f.bucket_epsilon;
    b.use_labels = std::holds_alternative<ckm::variant::SemiSupervised>(v);
    std::span<const std::int64_t> labels;
    if (b.use_labels) labels = *data.targets;
    const auto g = ckm::build_compressed(data.points, c, b, labels);
    write_json(dir / "graph.json", ckm::to_json(g));
    if (!std::holds_alternative<ckm::variant::Chromatic>(v)) {
      const auto plan = ckm::CompressedPlan::solve(g, v);
      s["compressed_cost"] = ckm::json_number(plan.feasible() ? plan.cost() : std::numeric_limits<double>::infinity());
    }
  }
  write_json(dir / "summary.json", s);
  return out.feasible ? 0 : kExitInfeasible;
}

// ------------------------------------------------------------------- gen

struct GenFlags {
  std::string kind = "gaussian";
  std::string out;
  std::size_t n = 100;
  std::size_t k = 3;
  std::size_t d = 2;
  double sigma = 1.0;
  double spacing = 10.0;
  std::size_t block = 1;
  std::size_t per_group = 10;
  double epsilon = 0.1;
  std::optional<std::uint64_t> seed;
};

json clustering_json(const ckm::Clustering& c) {
  json out = json::array();
  for (const auto& part : c) out.push_back(part);
  return out;
}

int run_gen(const GenFlags& f) {
  json side = {{"kind", f.kind}};
  ckm::Dataset data;
  if (f.kind == "gap") {
    const auto g = ckm::gen_gap_instance(f.n, f.epsilon);
    data = g.data;
    data.targets.emplace();
    for (std::size_t i = 0; i < data.size(); ++i) data.targets->push_back(i < f.n / 2 ? 0 : 1);
    side["n"] = f.n;
    side["epsilon"] = f.epsilon;
    side["k"] = 2;
    side["opt"] = g.opt2;
    side["merged_cost"] = g.merged_cost;
    side["clustering"] = clustering_json(g.optimal);
  } else {
    ckm::PlantedInstance inst;
    if (f.kind == "duplicate") {
      inst = ckm::duplicate_groups(f.k, f.per_group, f.d, f.spacing);
    } else {
      if (!f.seed) throw ckm::InvalidArgument("--seed is required for randomized generators");
      ckm::Rng rng(*f.seed);
      if (f.kind == "gaussian") {
        inst = ckm::planted_gaussian(f.n, f.k, f.d, f.sigma, f.spacing, rng);
      } else {
        inst = ckm::colored_sequential(f.n, f.k, f.d, f.block, f.sigma, f.spacing, rng);
      }
      side["seed"] = *f.seed;
    }
    data = inst.data;
    side["n"] = data.size();
    side["k"] = inst.truth.size();
    side["centers"] = ckm::to_json(inst.truth);
    side["clustering"] = clustering_json(inst.planted);
    side["opt"] = inst.certified_opt ? json(*inst.certified_opt) : json(nullptr);
  }
  ckm::write_dataset_csv(f.out, data);
  write_json(f.out + ".json", side);
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyFlags {
  std::string input;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<double> beta;
  std::optional<double> weak_deletion;
  std::optional<double> irreducible;
};

int run_verify(const VerifyFlags& f) {
  const auto data = load(f.input);
  ckm::Clustering parts;
  std::string source;
  if (data.targets) {
    std::int64_t groups = 0;
    for (auto t : *data.targets) {
      if (t < 0) throw ckm::InvalidArgument("verify: negative target label");
      groups = std::max(groups, t + 1);
    }
    parts.assign(static_cast<std::size_t>(groups), {});
    for (std::size_t i = 0; i < data.size(); ++i) parts[static_cast<std::size_t>((*data.targets)[i])].push_back(i);
    source = "targets";
  } else {
    if (!f.k) throw ckm::InvalidArgument("verify: without a target column --k is required");
    parts = ckm::opt_kmeans(data.points, *f.k).clustering;
    source = "oracle";
  }
  for (const auto& p : parts)
    if (p.empty()) throw ckm::InvalidArgument("verify: the clustering has an empty cluster");
  const std::size_t k = parts.size();

  std::optional<std::size_t> irr_k;
  if (f.irreducible) irr_k = k;
  const auto report = ckm::stability_report(data.points, parts, f.beta, irr_k);
  json j = ckm::to_json(report);
  j["clustering_source"] = source;
  j["k"] = k;
  json checks = json::object();
  bool all = true;
  if (f.beta) {
    const bool pass = ckm::check_beta_distributed(data.points, parts, *f.beta).pass;
    checks["beta_distributed"] = {{"value", *f.beta}, {"pass", pass}};
    all &= pass;
  }
  if (f.weak_deletion) {
    if (k < 2) throw ckm::InvalidArgument("verify: weak deletion needs k >= 2");
    const bool pass = ckm::check_weak_deletion(data.points, parts, *f.weak_deletion).pass;
    checks["weak_deletion"] = {{"value", *f.weak_deletion}, {"pass", pass}};
    all &= pass;
  }
  if (f.irreducible) {
    const bool pass = ckm::check_irreducible(data.points, k, *f.irreducible).pass;
    checks["irreducible"] = {{"value", *f.irreducible}, {"pass", pass}};
    all &= pass;
  }
  j["checks"] = checks;
  j["pass"] = all;
  const std::string text = j.dump(2) + "\n";
  if (f.out) {
    write_text(*f.out, text);
  } else {
    std::cout << text;
  }
  return all ? 0 : kExitCheckFailed;
}

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  app->add_option("--input", f.input, "dataset CSV")->required();
  app->add_option("--out-dir", f.out_dir, "output directory")->required();
  app->add_option("--k", f.k, "number of centers")->required()->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "master seed")->required();
  app->add_option("--oversample", f.oversample, "seed centers (default 2k)");
  app->add_option("--select", f.select, "argmin|ranges")->check(CLI::IsMember({"argmin", "ranges"}));
  f.variant.add(app);
  f.list.add(app);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained k-means: list generation, partitioning, streaming, stability checks"};
  app.require_subcommand(1);
  std::size_t workers = ckm::default_workers();
  app.add_option("--workers", workers, "worker threads (default: CKM_WORKERS or 1)")->check(CLI::PositiveNumber);

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "batch pipeline: seed, list, partition, assign");
  add_solve_flags(solve_cmd, solve);
  solve_cmd->add_flag("--candidates", solve.candidates, "also write the candidate list as CSV");

  StreamFlags stream;
  auto* stream_cmd = app.add_subcommand("stream", "multi-pass streaming pipeline over the CSV file");
  add_solve_flags(stream_cmd, stream.common);
  stream_cmd->add_option("--chunk", stream.chunk, "points buffered per merge-reduce chunk");
  stream_cmd->add_option("--bucket-eps", stream.bucket_epsilon, "hyperbucket resolution");
  stream_cmd->add_flag("--remove-aspect", stream.remove_aspect, "extra pass removing the aspect-ratio dependence");

  PartitionFlags part;
  auto* part_cmd = app.add_subcommand("partition", "optimal constrained assignment to fixed centers");
  part_cmd->add_option("--input", part.input, "dataset CSV")->required();
  part_cmd->add_option("--centers", part.centers, "centers JSON (array of coordinate arrays)")->required();
  part_cmd->add_option("--out-dir", part.out_dir, "output directory")->required();
  part_cmd->add_option("--bucket-eps", part.bucket_epsilon, "also write the compressed graph at this resolution");
  part.variant.add(part_cmd);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "synthetic datasets with a ground-truth sidecar");
  gen_cmd->add_option("--kind", gen.kind, "gaussian|duplicate|colored|gap")
      ->check(CLI::IsMember({"gaussian", "duplicate", "colored", "gap"}));
  gen_cmd->add_option("--out", gen.out, "dataset CSV path (sidecar: <out>.json)")->required();
  gen_cmd->add_option("--n", gen.n, "points");
  gen_cmd->add_option("--k", gen.k, "groups");
  gen_cmd->add_option("--d", gen.d, "dimension");
  gen_cmd->add_option("--sigma", gen.sigma, "group standard deviation");
  gen_cmd->add_option("--spacing", gen.spacing, "distance between group anchors");
  gen_cmd->add_option("--block", gen.block, "points per color (colored)");
  gen_cmd->add_option("--per-group", gen.per_group, "points per group (duplicate)");
  gen_cmd->add_option("--epsilon", gen.epsilon, "gap instance epsilon");
  gen_cmd->add_option("--seed", gen.seed, "seed (gaussian, colored)");

  VerifyFlags verify;
  auto* verify_cmd = app.add_subcommand("verify", "stability report for a clustering");
  verify_cmd->add_option("--input", verify.input, "dataset CSV; the target column is the clustering")->required();
  verify_cmd->add_option("--out", verify.out, "report path (default stdout)");
  verify_cmd->add_option("--k", verify.k, "clusters for the oracle when there is no target column");
  verify_cmd->add_option("--beta", verify.beta, "check beta-distributed at this beta");
  verify_cmd->add_option("--weak-deletion", verify.weak_deletion, "check weak deletion at this gamma");
  verify_cmd->add_option("--irreducible", verify.irreducible, "check irreducibility at this gamma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*solve_cmd) return run_solve(solve, workers);
    if (*stream_cmd) return run_stream(stream, workers);
    if (*part_cmd) return run_partition(part);
    if (*gen_cmd) return run_gen(gen);
    if (*verify_cmd) return run_verify(verify);
  } catch (const ckm::Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ckm::OracleLimitExceeded& e) {
    std::cerr << "oracle limit: " << e.what() << "\n";
    return kExitOracle;
  } catch (const ckm::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ckm::Error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/matching.hpp"

namespace ckm {

// A point in R^d. Coordinates are finite doubles; d >= 1.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords) : coords_(std::move(coords)) { validate(); }
  Point(std::initializer_list<double> coords) : coords_(coords) { validate(); }

  static Point zeros(std::size_t d) {
    if (d == 0) throw InvalidArgument("point dimension must be >= 1");
    Point p;
    p.coords_.assign(d, 0.0);
    return p;
  }

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t j) const { return coords_[j]; }
  double& operator[](std::size_t j) { return coords_[j]; }
  std::span<const double> coords() const noexcept { return coords_; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void validate() const {
    if (coords_.empty()) throw InvalidArgument("point dimension must be >= 1");
    for (double c : coords_)
      if (!std::isfinite(c)) throw InvalidArgument("point coordinates must be finite");
  }

  std::vector<double> coords_;
};

using PointList = std::vector<Point>;

// Ordered points with optional per-point color and target-cluster labels.
struct Dataset {
  PointList points;
  std::optional<std::vector<std::int64_t>> colors;
  std::optional<std::vector<std::int64_t>> targets;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().dim(); }

  // Throws if the dataset breaks its invariants.
  void validate() const {
    for (const auto& p : points)
      if (p.dim() != dim()) throw DimensionMismatch("dataset points disagree on dimension");
    if (colors && colors->size() != points.size())
      throw InvalidArgument("color labels must cover every point");
    if (targets && targets->size() != points.size())
      throw InvalidArgument("target labels must cover every point");
  }
};

struct CenterSet {
  PointList centers;

  std::size_t size() const noexcept { return centers.size(); }
  bool empty() const noexcept { return centers.empty(); }
  const Point& operator[](std::size_t i) const { return centers[i]; }

  friend bool operator==(const CenterSet&, const CenterSet&) = default;
};

// Disjoint index sets covering [0, n).
using Clustering = std::vector<std::vector<std::size_t>>;

// Per-point owning centers. Every point owns exactly `multiplicity` centers
// (1 except for fault-tolerant solutions), stored flat.
struct Assignment {
  std::size_t multiplicity = 1;
  std::vector<std::size_t> owners_flat;
  double cost = 0.0;

  std::size_t num_points() const noexcept {
    return multiplicity == 0 ? 0 : owners_flat.size() / multiplicity;
  }
  std::span<const std::size_t> owners(std::size_t point) const {
    return std::span<const std::size_t>(owners_flat).subspan(point * multiplicity, multiplicity);
  }
  std::size_t owner(std::size_t point) const { return owners_flat[point * multiplicity]; }
};

inline double squared_dist(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("squared_dist: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

inline double squared_dist(const Point& a, const Point& b) { return squared_dist(a.coords(), b.coords()); }

inline Point centroid(std::span<const Point> points) {
  if (points.empty()) throw EmptyInput("centroid of an empty point list");
  Point mu = Point::zeros(points.front().dim());
  for (const auto& p : points) {
    if (p.dim() != mu.dim()) throw DimensionMismatch("centroid: dimension mismatch");
    for (std::size_t j = 0; j < p.dim(); ++j) mu[j] += p[j];
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (std::size_t j = 0; j < mu.dim(); ++j) mu[j] *= inv;
  return mu;
}

// Centroid of the points of `data` selected by `indices`.
inline Point centroid_of(std::span<const Point> data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw EmptyInput("centroid of an empty index set");
  Point mu = Point::zeros(data[indices.front()].dim());
  for (std::size_t i : indices) {
    const Point& p = data[i];
    if (p.dim() != mu.dim()) throw DimensionMismatch("centroid: dimension mismatch");
    for (std::size_t j = 0; j < p.dim(); ++j) mu[j] += p[j];
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (std::size_t j = 0; j < mu.dim(); ++j) mu[j] *= inv;
  return mu;
}

struct Nearest {
  std::size_t index = 0;
  double sqdist = std::numeric_limits<double>::infinity();
};

// Nearest center with ties going to the lowest index.
inline Nearest nearest_center(const Point& x, const CenterSet& c) {
  if (c.empty()) throw EmptyInput("empty center set");
  Nearest best;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = squared_dist(x, c[i]);
    if (d < best.sqdist) best = {i, d};
  }
  return best;
}

// Phi(C, X): sum over points of the squared distance to the nearest center.
inline double phi_cost(const CenterSet& c, std::span<const Point> x) {
  if (c.empty()) throw EmptyInput("phi_cost: empty center set");
  double total = 0.0;
  for (const auto& p : x) total += nearest_center(p, c).sqdist;
  return total;
}

inline double phi_cost(const Point& c, std::span<const Point> x) {
  double total = 0.0;
  for (const auto& p : x) total += squared_dist(p, c);
  return total;
}

// Delta(X): optimal 1-means cost, i.e. cost against the centroid.
inline double delta_cost(std::span<const Point> x) { return phi_cost(centroid(x), x); }

struct PsiResult {
  double cost = 0.0;
  // perm[i] = index of the center matched to part i.
  std::vector<std::size_t> perm;
};

// psi(C, parts) = min over bijections parts -> centers of sum_i Phi(c_pi(i), X_i).
// Solved as a min-cost perfect matching on M[i][j] = Phi(c_j, X_i); an empty
// part contributes 0 to every center.
inline PsiResult psi_cost(const CenterSet& c, std::span<const PointList> parts) {
  if (c.size() != parts.size()) throw InvalidArgument("psi_cost: |C| must equal number of parts");
  CostMatrix<double> m(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) m(i, j) = phi_cost(c[j], parts[i]);
  auto match = min_cost_matching(m);
  return {match.cost, std::move(match.row_to_col)};
}

inline std::vector<PointList> gather_parts(const PointList& data, const Clustering& clustering) {
  std::vector<PointList> parts(clustering.size());
  for (std::size_t i = 0; i < clustering.size(); ++i)
    for (std::size_t idx : clustering[i]) parts[i].push_back(data.at(idx));
  return parts;
}

inline Assignment voronoi_partition(std::span<const Point> x, const CenterSet& c) {
  if (c.empty()) throw EmptyInput("voronoi_partition: empty center set");
  Assignment a;
  a.owners_flat.reserve(x.size());
  for (const auto& p : x) {
    const Nearest nn = nearest_center(p, c);
    a.owners_flat.push_back(nn.index);
    a.cost += nn.sqdist;
  }
  return a;
}

inline Assignment voronoi_partition(const Dataset& x, const CenterSet& c) {
  return voronoi_partition(std::span<const Point>(x.points), c);
}

// Groups point indices by their (first) owner.
inline Clustering clustering_from_assignment(const Assignment& a, std::size_t k) {
  Clustering parts(k);
  for (std::size_t i = 0; i < a.num_points(); ++i) parts.at(a.owner(i)).push_back(i);
  return parts;
}

}  // namespace ckm

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/random.hpp"

namespace ckm {

struct PlantedInstance {
  Dataset data;
  CenterSet truth;
  Clustering planted;
  // Optimal k-means cost when the planted partition is provably optimal.
  std::optional<double> certified_opt;
};

// If the planted cost P is at most D/2, where D is the smallest squared
// distance between points of different groups, no other k-clustering can
// be cheaper: a clustering other than the planted one must put two points
// of different groups together, which alone costs at least D/2.
inline std::optional<double> certify_planted_opt(std::span<const Point> x, const Clustering& parts) {
  double planted = 0.0;
  for (const auto& part : parts) {
    if (part.empty()) return std::nullopt;
    const Point mu = centroid_of(x, part);
    for (std::size_t i : part) planted += squared_dist(x[i], mu);
  }
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < parts.size(); ++a)
    for (std::size_t b = a + 1; b < parts.size(); ++b)
      for (std::size_t i : parts[a])
        for (std::size_t j : parts[b]) sep = std::min(sep, squared_dist(x[i], x[j]));
  if (planted <= sep / 2.0) return planted;
  return std::nullopt;
}

namespace detail {

inline Point group_anchor(std::size_t g, std::size_t d, double spacing) {
  Point c = Point::zeros(d);
  c[0] = spacing * static_cast<double>(g % 4);
  if (d > 1) c[1] = spacing * static_cast<double>(g / 4);
  return c;
}

inline void finish(PlantedInstance& inst) {
  inst.data.targets.emplace();
  inst.planted.assign(inst.truth.size(), {});
  for (std::size_t i = 0; i < inst.data.size(); ++i) {
    const std::size_t g = i % inst.truth.size();
    inst.data.targets->push_back(static_cast<std::int64_t>(g));
    inst.planted[g].push_back(i);
  }
  inst.certified_opt = certify_planted_opt(inst.data.points, inst.planted);
}

}  // namespace detail

// k spherical Gaussian groups with standard deviation sigma around anchors
// `spacing` apart. Point i belongs to group i mod k.
inline PlantedInstance planted_gaussian(std::size_t n, std::size_t k, std::size_t d, double sigma, double spacing,
                                        Rng& rng) {
  if (k < 1 || n < k) throw InvalidArgument("planted_gaussian: need 1 <= k <= n");
  if (d < 1) throw InvalidArgument("planted_gaussian: d must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("planted_gaussian: sigma must be >= 0");
  PlantedInstance inst;
  for (std::size_t g = 0; g < k; ++g) inst.truth.centers.push_back(detail::group_anchor(g, d, spacing));
  for (std::size_t i = 0; i < n; ++i) {
    Point p = inst.truth[i % k];
    for (std::size_t j = 0; j < d; ++j) p[j] += sigma * rng.normal();
    inst.data.points.push_back(std::move(p));
  }
  detail::finish(inst);
  return inst;
}

// g groups of coincident points on integer anchors; OPT = 0 for k = g.
inline PlantedInstance duplicate_groups(std::size_t groups, std::size_t per_group, std::size_t d,
                                        double spacing = 10.0) {
  if (groups < 1 || per_group < 1) throw InvalidArgument("duplicate_groups: need at least one point per group");
  PlantedInstance inst;
  for (std::size_t g = 0; g < groups; ++g) inst.truth.centers.push_back(detail::group_anchor(g, d, spacing));
  for (std::size_t i = 0; i < groups * per_group; ++i) inst.data.points.push_back(inst.truth[i % groups]);
  detail::finish(inst);
  return inst;
}

// Planted Gaussian data whose colors arrive in contiguous blocks of
// `block` points (sequential chromatic order).
inline PlantedInstance colored_sequential(std::size_t n, std::size_t k, std::size_t d, std::size_t block,
                                          double sigma, double spacing, Rng& rng) {
  if (block < 1) throw InvalidArgument("colored_sequential: block must be >= 1");
  PlantedInstance inst = planted_gaussian(n, k, d, sigma, spacing, rng);
  inst.data.colors.emplace();
  for (std::size_t i = 0; i < n; ++i) inst.data.colors->push_back(static_cast<std::int64_t>(i / block));
  return inst;
}

}  // namespace ckm

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/random.hpp"
#include "ckm/sampling.hpp"
#include "ckm/stream.hpp"

namespace ckm {

// A constant-factor (bi-criteria) starting solution.
struct SeedSolution {
  CenterSet centers;
  // Phi(centers, X). For merge-reduce this is measured against the final
  // weighted summary, which is what a single pass can afford.
  double cost = 0.0;
  double alpha_claim = 1.0;
  // High-water mark of resident points while seeding (0 for batch seeding).
  std::size_t peak_points = 0;
  // Number of input points seen.
  std::size_t points_seen = 0;
};

inline std::size_t default_oversample(std::size_t k) { return 2 * k; }

// D^2 seeding over weighted points: the first center is drawn
// weight-proportionally, every following one proportionally to
// weight * (squared distance to the chosen centers). Exactly `oversample`
// centers are drawn; 0 selects the default of 2k.
inline SeedSolution d2_seed(std::span<const Point> x, std::span<const double> weights, std::size_t k,
                            std::size_t oversample, Rng& rng, double alpha_claim = 1.0) {
  if (k < 1) throw InvalidArgument("d2_seed: k must be >= 1");
  if (x.empty()) throw EmptyInput("d2_seed: empty dataset");
  if (!weights.empty() && weights.size() != x.size()) throw InvalidArgument("d2_seed: weight count mismatch");
  if (oversample == 0) oversample = default_oversample(k);

  const std::size_t n = x.size();
  auto weight_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  SeedSolution out;
  out.alpha_claim = alpha_claim;
  out.centers.centers.reserve(oversample);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<double> mass(n);

  for (std::size_t round = 0; round < oversample; ++round) {
    double total = 0.0;
    if (round > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        mass[i] = weight_of(i) * nearest[i];
        total += mass[i];
      }
    }
    if (!(total > 0.0)) {
      for (std::size_t i = 0; i < n; ++i) mass[i] = weight_of(i);
    }
    const std::size_t pick = DiscreteSampler(mass)(rng);
    out.centers.centers.push_back(x[pick]);
    const Point& c = out.centers.centers.back();
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_dist(x[i], c));
  }

  for (std::size_t i = 0; i < n; ++i) out.cost += weight_of(i) * nearest[i];
  out.points_seen = n;
  return out;
}

inline SeedSolution d2_seed(std::span<const Point> x, std::size_t k, std::size_t oversample, Rng& rng) {
  return d2_seed(x, std::span<const double>{}, k, oversample, rng);
}

namespace detail {

struct WeightedPoints {
  PointList points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
  void append(WeightedPoints&& other) {
    for (auto& p : other.points) points.push_back(std::move(p));
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  }
};

// Seeds k centers on a weighted set and weights each center by the mass of
// its Voronoi cell.
inline WeightedPoints reduce_to_k(const WeightedPoints& in, std::size_t k, Rng& rng) {
  const SeedSolution s = d2_seed(in.points, in.weights, k, k, rng);
  WeightedPoints out;
  out.points = s.centers.centers;
  out.weights.assign(out.points.size(), 0.0);
  for (std::size_t i = 0; i < in.size(); ++i)
    out.weights[nearest_center(in.points[i], s.centers).index] += in.weights[i];
  return out;
}

}  // namespace detail

// One-pass merge-reduce seeding. Raw points are buffered `chunk` at a time;
// a full buffer is reduced to k Voronoi-weighted centers, and a summary
// level is reduced again once it holds max(chunk, 2k) weighted points. At
// the end the remaining summaries are re-seeded with `oversample` centers.
// A stream that fits in one chunk is seeded exactly as d2_seed would.
inline SeedSolution merge_reduce_seed(StreamSource& src, std::size_t k, std::size_t chunk, Rng& rng,
                                      std::size_t oversample = 0, SpaceMeter* meter = nullptr,
                                      double alpha_claim = 1.0) {
  if (k < 1) throw InvalidArgument("merge_reduce_seed: k must be >= 1");
  if (chunk < k) throw InvalidArgument("merge_reduce_seed: chunk size must be >= k");
  if (oversample == 0) oversample = default_oversample(k);
  const std::size_t level_cap = std::max(chunk, 2 * k);

  detail::WeightedPoints buffer;
  std::vector<detail::WeightedPoints> levels;
  std::size_t resident = 0;
  std::size_t peak = 0;
  MeterLease lease(meter, 0);
  auto track = [&](std::size_t now) {
    resident = now;
    peak = std::max(peak, resident);
    lease.resize(resident);
  };
  auto level_total = [&] {
    std::size_t s = 0;
    for (const auto& l : levels) s += l.size();
    return s;
  };

  bool reduced_any = false;
  auto push_summary = [&](detail::WeightedPoints summary) {
    std::size_t lvl = 0;
    while (true) {
      if (levels.size() <= lvl) levels.emplace_back();
      levels[lvl].append(std::move(summary));
      if (levels[lvl].size() < level_cap) break;
      summary = detail::reduce_to_k(levels[lvl], k, rng);
      levels[lvl] = {};
      ++lvl;
    }
  };

  std::size_t n = 0;
  {
    auto cursor = src.open();
    // One record of lookahead: a stream of exactly one chunk stays on the
    // batch path.
    auto rec = cursor->next();
    while (rec) {
      auto next = cursor->next();
      ++n;
      buffer.points.push_back(std::move(rec->point));
      buffer.weights.push_back(1.0);
      track(buffer.size() + level_total());
      if (buffer.size() == chunk && (next || reduced_any)) {
        push_summary(detail::reduce_to_k(buffer, k, rng));
        reduced_any = true;
        buffer = {};
        track(level_total());
      }
      rec = std::move(next);
    }
  }
  if (n < k) throw EmptyInput("merge_reduce_seed: stream shorter than k points");

  SeedSolution out;
  if (!reduced_any) {
    out = d2_seed(buffer.points, std::span<const double>{}, k, oversample, rng, alpha_claim);
  } else {
    detail::WeightedPoints all = std::move(buffer);
    for (auto& l : levels) all.append(std::move(l));
    out = d2_seed(all.points, all.weights, k, oversample, rng, alpha_claim);
  }
  out.peak_points = peak;
  out.points_seen = n;
  return out;
}

}  // namespace ckm

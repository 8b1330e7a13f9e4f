#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/random.hpp"

namespace ckm {

// D^2 weight of every point w.r.t. C, optionally multiplied by a per-point
// weight (a weighted point counts as that many copies). With C empty every
// point gets its own weight (uniform sampling).
inline std::vector<double> d2_weights(std::span<const Point> x, const CenterSet& c,
                                      std::span<const double> point_weights = {}) {
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double base = c.empty() ? 1.0 : nearest_center(x[i], c).sqdist;
    w[i] = point_weights.empty() ? base : base * point_weights[i];
  }
  return w;
}

// p_i = Phi(C, {x_i}) / Phi(C, X). Falls back to the (weighted) uniform
// distribution when C is empty or the total potential is zero.
inline std::vector<double> d2_distribution(std::span<const Point> x, const CenterSet& c,
                                           std::span<const double> point_weights = {}) {
  if (x.empty()) throw EmptyInput("d2_distribution: empty dataset");
  if (!point_weights.empty() && point_weights.size() != x.size())
    throw InvalidArgument("d2_distribution: weight count mismatch");
  std::vector<double> p = d2_weights(x, c, point_weights);
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) {
    p.assign(x.size(), 1.0);
    if (!point_weights.empty()) std::copy(point_weights.begin(), point_weights.end(), p.begin());
    total = 0.0;
    for (double v : p) total += v;
    if (!(total > 0.0)) throw InvalidArgument("d2_distribution: all point weights are zero");
  }
  for (double& v : p) v /= total;
  return p;
}

// Draws from a fixed discrete distribution by inverse CDF.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> probabilities) : cdf_(probabilities.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      acc += probabilities[i];
      cdf_[i] = acc;
    }
    total_ = acc;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform01() * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i >= cdf_.size()) i = cdf_.size() - 1;
    // Never land on a zero-probability slot through rounding at the boundary.
    while (i > 0 && cdf_[i] == cdf_[i - 1]) --i;
    return i;
  }

 private:
  std::vector<double> cdf_;
  double total_ = 0.0;
};

// m independent D^2 draws; returns point indices (a multiset).
inline std::vector<std::size_t> d2_sample(std::span<const Point> x, const CenterSet& c, std::size_t m, Rng& rng,
                                          std::span<const double> point_weights = {}) {
  if (x.empty()) throw EmptyInput("d2_sample: empty dataset");
  if (m < 1) throw InvalidArgument("d2_sample: count must be >= 1");
  const auto p = d2_distribution(x, c, point_weights);
  DiscreteSampler draw(p);
  std::vector<std::size_t> out(m);
  for (auto& idx : out) idx = draw(rng);
  return out;
}

// Single-item weighted reservoir: the i-th item replaces the held one with
// probability w_i / sum_{j<=i} w_j. Weight may be any ordered field type
// (double in production, exact rationals in tests).
template <typename Item, typename Weight = double>
class Reservoir {
 public:
  const std::optional<Item>& held() const noexcept { return held_; }
  const Weight& weight_sum() const noexcept { return weight_sum_; }

  // `coin(p)` must return true with probability p.
  template <typename Coin>
  void offer(Item item, const Weight& weight, Coin&& coin) {
    if (weight < Weight{}) throw InvalidArgument("reservoir: negative weight");
    if (weight == Weight{}) return;
    weight_sum_ = weight_sum_ + weight;
    if (coin(weight / weight_sum_)) held_ = std::move(item);
  }

  void offer(Item item, const Weight& weight, Rng& rng) {
    offer(std::move(item), weight, [&rng](const Weight& p) { return rng.uniform01() < static_cast<double>(p); });
  }

 private:
  std::optional<Item> held_;
  Weight weight_sum_{};
};

template <typename Item>
struct OriginDraw {
  std::optional<Item> item;
  double origin_probability = 0.0;
};

// Thins draws taken from a non-uniform distribution whose probabilities are
// bounded below by `floor`: a draw x survives with probability floor / p_x,
// which makes every survivor uniform over the support. Rejected draws become
// empty.
template <typename Item>
std::vector<std::optional<Item>> uniformize(std::span<const OriginDraw<Item>> draws, double floor, Rng& rng) {
  if (!(floor > 0.0)) throw InvalidArgument("uniformize: floor must be positive");
  std::vector<std::optional<Item>> out;
  out.reserve(draws.size());
  for (const auto& d : draws) {
    if (!d.item) {
      out.emplace_back(std::nullopt);
      continue;
    }
    if (d.origin_probability < floor) throw InvalidArgument("uniformize: origin probability below floor");
    const double keep = floor / d.origin_probability;
    if (keep >= 1.0 || rng.uniform01() < keep)
      out.push_back(d.item);
    else
      out.emplace_back(std::nullopt);
  }
  return out;
}

}  // namespace ckm

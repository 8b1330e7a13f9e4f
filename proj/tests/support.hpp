#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "ckm/geometry.hpp"
#include "ckm/random.hpp"

namespace ckm::test {

inline Point random_point(Rng& rng, std::size_t d, double lo = -10.0, double hi = 10.0) {
  std::vector<double> c(d);
  for (auto& v : c) v = lo + (hi - lo) * rng.uniform01();
  return Point(std::move(c));
}

// Small integer grid, so squared distances are exact integers.
inline Point grid_point(Rng& rng, std::size_t d, std::size_t side = 6) {
  std::vector<double> c(d);
  for (auto& v : c) v = static_cast<double>(rng.uniform_index(side));
  return Point(std::move(c));
}

inline PointList random_points(Rng& rng, std::size_t n, std::size_t d) {
  PointList out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_point(rng, d));
  return out;
}

inline bool rel_close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Pearson statistic against expected probabilities; bins with zero
// expectation must be empty.
inline bool chi_square_accepts(const std::vector<std::size_t>& counts, const std::vector<double>& probs,
                               double level = 0.99) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  double stat = 0.0;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * n;
    if (e == 0.0) {
      if (counts[i] != 0) return false;
      continue;
    }
    ++bins;
    stat += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
  }
  if (bins < 2) return true;
  const boost::math::chi_squared dist(static_cast<double>(bins - 1));
  return stat <= boost::math::quantile(dist, level);
}

// Two-sided binomial acceptance at the given level by normal approximation.
inline bool binomial_accepts(std::size_t successes, std::size_t trials, double p, double z = 2.5758) {
  const double mean = p * static_cast<double>(trials);
  const double sd = std::sqrt(static_cast<double>(trials) * p * (1.0 - p));
  return std::abs(static_cast<double>(successes) - mean) <= z * sd + 0.5;
}

// psi by enumerating all t! bijections.
inline double psi_by_permutations(const CenterSet& c, const std::vector<PointList>& parts,
                                  std::vector<std::size_t>* best_perm = nullptr) {
  std::vector<std::size_t> p(c.size());
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) s += phi_cost(c[p[i]], parts[i]);
    if (s < best) {
      best = s;
      if (best_perm) *best_perm = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

}  // namespace ckm::test

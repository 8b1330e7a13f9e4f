#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/partition.hpp"

namespace ckm {

// Size guard for exhaustive enumeration.
struct OracleLimit {
  std::size_t max_n = 10;
  std::size_t max_k = 3;
  std::uint64_t max_assignments = 20'000'000;

  // Throws unless `choices^n` assignments of n points fit the guard.
  void check(std::size_t n, std::size_t k, std::uint64_t choices) const {
    if (n > max_n) throw OracleLimitExceeded("oracle: n = " + std::to_string(n) + " exceeds max_n");
    if (k > max_k) throw OracleLimitExceeded("oracle: k = " + std::to_string(k) + " exceeds max_k");
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (choices != 0 && total > max_assignments / choices)
        throw OracleLimitExceeded("oracle: enumeration exceeds max_assignments");
      total *= choices;
    }
    if (total > max_assignments) throw OracleLimitExceeded("oracle: enumeration exceeds max_assignments");
  }
};

namespace detail {

// Visits every vector in [0, base)^n in lexicographic order. The visitor
// returns false to stop early.
template <typename Visit>
void for_each_labeling(std::size_t n, std::size_t base, Visit&& visit) {
  std::vector<std::size_t> label(n, 0);
  if (base == 0) return;
  while (true) {
    if (!visit(static_cast<const std::vector<std::size_t>&>(label))) return;
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++label[pos] < base) break;
      label[pos] = 0;
      if (pos == 0) return;
    }
    if (n == 0) return;
  }
}

inline std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t k, std::size_t l) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (cur.size() == l) {
      out.push_back(cur);
      return;
    }
    for (std::size_t j = start; j < k; ++j) {
      cur.push_back(j);
      self(self, j + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace detail

struct OracleKMeans {
  double cost = std::numeric_limits<double>::infinity();
  Clustering clustering;
};

// Exact k-means optimum: minimum of sum_i Delta(X_i) over every labeling of
// the points with k labels (empty parts cost 0). The first minimum in
// lexicographic order is the witness.
inline OracleKMeans opt_kmeans(std::span<const Point> x, std::size_t k, const OracleLimit& limit = {}) {
  if (k < 1) throw InvalidArgument("opt_kmeans: k must be >= 1");
  if (x.empty()) throw EmptyInput("opt_kmeans: empty dataset");
  limit.check(x.size(), k, k);
  OracleKMeans best;
  std::vector<std::size_t> best_label;
  const std::size_t d = x[0].dim();
  std::vector<std::vector<double>> sum(k, std::vector<double>(d));
  std::vector<double> sqnorm(k);
  std::vector<std::size_t> count(k);
  detail::for_each_labeling(x.size(), k, [&](const std::vector<std::size_t>& label) {
    for (std::size_t j = 0; j < k; ++j) {
      std::fill(sum[j].begin(), sum[j].end(), 0.0);
      count[j] = 0;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      ++count[label[i]];
      for (std::size_t a = 0; a < d; ++a) sum[label[i]][a] += x[i][a];
    }
    // Delta(X_j) = sum ||x - mu_j||^2 evaluated directly against the centroid.
    double cost = 0.0;
    std::vector<Point> mu(k);
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] == 0) continue;
      std::vector<double> m(d);
      for (std::size_t a = 0; a < d; ++a) m[a] = sum[j][a] / static_cast<double>(count[j]);
      mu[j] = Point(std::move(m));
    }
    for (std::size_t i = 0; i < x.size(); ++i) cost += squared_dist(x[i], mu[label[i]]);
    if (cost < best.cost) {
      best.cost = cost;
      best_label = label;
    }
    return true;
  });
  best.clustering.assign(k, {});
  for (std::size_t i = 0; i < x.size(); ++i) best.clustering[best_label[i]].push_back(i);
  return best;
}

struct OracleConstrained {
  // +infinity / max() when no feasible assignment exists.
  double cost = std::numeric_limits<double>::infinity();
  FlowCost fixed_cost = std::numeric_limits<FlowCost>::max();
  bool feasible() const noexcept { return std::isfinite(cost); }
};

// Exact constrained optimum by enumerating every assignment of the points
// to the fixed centers (every l-subset per point for fault-tolerant, every
// matching for semi-supervised). The fixed-point cost uses the same scale
// convention as the partition solvers: the largest edge cost maps to 2^bits.
inline OracleConstrained opt_constrained(const Dataset& x, const CenterSet& c, const Variant& v,
                                         const OracleLimit& limit = {}, int precision_bits = kDefaultPrecisionBits) {
  x.validate();
  const std::size_t n = x.size();
  const std::size_t k = c.size();
  if (k == 0) throw EmptyInput("opt_constrained: empty center set");
  validate_variant(v, k);

  std::vector<std::vector<double>> d(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) d[i][j] = squared_dist(x.points[i], c[j]);

  const auto* semi = std::get_if<variant::SemiSupervised>(&v);
  const auto* ft = std::get_if<variant::FaultTolerant>(&v);
  if (semi && !x.targets) throw InvalidArgument("opt_constrained: semi-supervised needs target labels");
  if (std::holds_alternative<variant::Chromatic>(v) && !x.colors)
    throw InvalidArgument("opt_constrained: chromatic needs colors");

  std::vector<std::vector<std::size_t>> perms;
  if (semi) {
    std::vector<std::size_t> p(k);
    std::iota(p.begin(), p.end(), 0);
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  }
  auto edge = [&](std::size_t i, std::size_t j, const std::vector<std::size_t>* perm) {
    if (semi) return semi_supervised_cost_terms(d[i][j], j, (*x.targets)[i], *perm, semi->alpha);
    return d[i][j];
  };

  double max_cost = 0.0;
  if (semi) {
    for (const auto& p : perms)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) max_cost = std::max(max_cost, edge(i, j, &p));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) max_cost = std::max(max_cost, d[i][j]);
  }
  const FixedPointScale q = FixedPointScale::for_max(max_cost, precision_bits);

  // Choices per point: a single center, or an l-subset for fault-tolerant.
  std::vector<std::vector<std::size_t>> choices;
  if (ft) {
    choices = detail::subsets_of_size(k, ft->l);
  } else {
    for (std::size_t j = 0; j < k; ++j) choices.push_back({j});
  }
  limit.check(n, k, choices.size());

  OracleConstrained best;
  std::vector<std::size_t> load(k);
  detail::for_each_labeling(n, choices.size(), [&](const std::vector<std::size_t>& label) {
    std::fill(load.begin(), load.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j : choices[label[i]]) ++load[j];
    if (const auto* g = std::get_if<variant::RGather>(&v))
      for (std::size_t j = 0; j < k; ++j)
        if (load[j] < g->r) return true;
    if (const auto* cap = std::get_if<variant::RCapacity>(&v))
      for (std::size_t j = 0; j < k; ++j)
        if (load[j] > cap->r) return true;
    if (std::holds_alternative<variant::Chromatic>(v)) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          if ((*x.colors)[a] == (*x.colors)[b] && label[a] == label[b]) return true;
    }
    const std::size_t rounds = semi ? perms.size() : 1;
    for (std::size_t r = 0; r < rounds; ++r) {
      const std::vector<std::size_t>* perm = semi ? &perms[r] : nullptr;
      FlowCost fixed = 0;
      double real = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : choices[label[i]]) {
          const double e = edge(i, j, perm);
          fixed += q(e);
          real += e;
        }
      if (fixed < best.fixed_cost) {
        best.fixed_cost = fixed;
        best.cost = real;
      }
    }
    return true;
  });
  return best;
}

// Sum over points of the squared distances to their l nearest centers.
inline double fault_tolerant_direct(std::span<const Point> x, const CenterSet& c, std::size_t l) {
  if (l < 1 || l > c.size()) throw InvalidArgument("fault_tolerant_direct: need 1 <= l <= |centers|");
  double total = 0.0;
  std::vector<double> d(c.size());
  for (const auto& p : x) {
    for (std::size_t j = 0; j < c.size(); ++j) d[j] = squared_dist(p, c[j]);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(l), d.end());
    for (std::size_t j = 0; j < l; ++j) total += d[j];
  }
  return total;
}

}  // namespace ckm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/listgen.hpp"
#include "ckm/oracle.hpp"
#include "ckm/random.hpp"
#include "ckm/seeding.hpp"

namespace ckm {

// A point x outside cluster i (it sits in cluster j) that breaks a condition.
struct StabilityWitness {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t x = 0;
};

struct CheckResult {
  bool pass = true;
  std::vector<StabilityWitness> witnesses;
};

namespace detail {

struct ClusterStats {
  std::vector<Point> mu;
  std::vector<double> delta;
  std::vector<std::size_t> size;
  std::vector<std::size_t> owner;  // cluster of each point
  double opt = 0.0;
};

inline ClusterStats cluster_stats(std::span<const Point> x, const Clustering& parts) {
  ClusterStats s;
  s.owner.assign(x.size(), SIZE_MAX);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw EmptyInput("stability: empty cluster");
    for (std::size_t p : parts[i]) {
      if (p >= x.size() || s.owner[p] != SIZE_MAX) throw InvalidArgument("stability: clustering is not a partition");
      s.owner[p] = i;
    }
    s.mu.push_back(centroid_of(x, parts[i]));
    double d = 0.0;
    for (std::size_t p : parts[i]) d += squared_dist(x[p], s.mu.back());
    s.delta.push_back(d);
    s.size.push_back(parts[i].size());
    s.opt += d;
  }
  for (std::size_t p = 0; p < x.size(); ++p)
    if (s.owner[p] == SIZE_MAX) throw InvalidArgument("stability: clustering does not cover every point");
  return s;
}

// Largest double not above `start` for which `passes` holds.
template <typename Pred>
double step_down_until(double start, Pred&& passes) {
  double v = start;
  for (int guard = 0; guard < 64 && !passes(v); ++guard) v = std::nextafter(v, -std::numeric_limits<double>::infinity());
  return v;
}

}  // namespace detail

// Every point outside cluster i is at squared distance >= beta * OPT / |X_i|
// from mu_i, with OPT the cost of the supplied clustering.
inline CheckResult check_beta_distributed(std::span<const Point> x, const Clustering& parts, double beta) {
  const auto s = detail::cluster_stats(x, parts);
  CheckResult out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double bound = beta * s.opt / static_cast<double>(s.size[i]);
    for (std::size_t p = 0; p < x.size(); ++p) {
      if (s.owner[p] == i) continue;
      if (squared_dist(x[p], s.mu[i]) < bound) {
        out.pass = false;
        out.witnesses.push_back({i, s.owner[p], p});
      }
    }
  }
  return out;
}

// OPT^(i->j) = OPT + |X_i| * ||mu_i - mu_j||^2: cost after handing cluster
// i to center j.
inline double reassignment_cost(std::span<const Point> x, const Clustering& parts, std::size_t i, std::size_t j) {
  const auto s = detail::cluster_stats(x, parts);
  return s.opt + static_cast<double>(s.size[i]) * squared_dist(s.mu[i], s.mu[j]);
}

// OPT^(i->j) > (1 + gamma) * OPT for every ordered pair i != j. An
// instance with OPT = 0 passes.
inline CheckResult check_weak_deletion(std::span<const Point> x, const Clustering& parts, double gamma) {
  if (parts.size() < 2) throw InvalidArgument("weak deletion: needs k >= 2");
  const auto s = detail::cluster_stats(x, parts);
  CheckResult out;
  if (s.opt == 0.0) return out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = 0; j < parts.size(); ++j) {
      if (i == j) continue;
      const double moved = s.opt + static_cast<double>(s.size[i]) * squared_dist(s.mu[i], s.mu[j]);
      if (!(moved > (1.0 + gamma) * s.opt)) {
        out.pass = false;
        out.witnesses.push_back({i, j, SIZE_MAX});
      }
    }
  return out;
}

struct IrreducibleCheck {
  bool pass = true;
  double opt_k = 0.0;
  double opt_k_minus_1 = 0.0;
};

// OPT_{k-1} >= (1 + gamma) * OPT_k with both optima from the oracle.
inline IrreducibleCheck check_irreducible(std::span<const Point> x, std::size_t k, double gamma,
                                          const OracleLimit& limit = {}) {
  if (k < 2) throw InvalidArgument("irreducible: needs k >= 2");
  IrreducibleCheck out;
  out.opt_k = opt_kmeans(x, k, limit).cost;
  out.opt_k_minus_1 = opt_kmeans(x, k - 1, limit).cost;
  out.pass = out.opt_k == 0.0 || out.opt_k_minus_1 >= (1.0 + gamma) * out.opt_k;
  return out;
}

struct StabilityReport {
  double beta_distributed_max = 0.0;
  double weak_deletion_gamma = 0.0;
  std::optional<double> irreducible_gamma;  // needs the oracle
  double opt = 0.0;
  std::vector<StabilityWitness> witnesses;  // beta-distributed violations at the requested beta
};

// Largest passing beta / gamma values for a clustering. Infinity when the
// condition holds for every value (zero-cost clusterings).
inline StabilityReport stability_report(std::span<const Point> x, const Clustering& parts,
                                        std::optional<double> requested_beta = std::nullopt,
                                        std::optional<std::size_t> irreducible_k = std::nullopt,
                                        const OracleLimit& limit = {}) {
  const auto s = detail::cluster_stats(x, parts);
  StabilityReport r;
  r.opt = s.opt;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (s.opt == 0.0) {
    r.beta_distributed_max = kInf;
    r.weak_deletion_gamma = kInf;
  } else {
    double beta = kInf;
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t p = 0; p < x.size(); ++p)
        if (s.owner[p] != i)
          beta = std::min(beta, squared_dist(x[p], s.mu[i]) * static_cast<double>(s.size[i]) / s.opt);
    if (std::isfinite(beta))
      beta = detail::step_down_until(beta, [&](double b) { return check_beta_distributed(x, parts, b).pass; });
    r.beta_distributed_max = beta;

    if (parts.size() >= 2) {
      double ratio = kInf;
      for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = 0; j < parts.size(); ++j)
          if (i != j)
            ratio = std::min(ratio, (s.opt + static_cast<double>(s.size[i]) * squared_dist(s.mu[i], s.mu[j])) / s.opt);
      // The condition is strict, so start just below the ratio.
      r.weak_deletion_gamma = detail::step_down_until(std::nextafter(ratio - 1.0, -kInf), [&](double g) {
        return check_weak_deletion(x, parts, g).pass;
      });
    }
  }
  if (irreducible_k) {
    const auto chk = check_irreducible(x, *irreducible_k, 0.0, limit);
    if (chk.opt_k == 0.0) {
      r.irreducible_gamma = kInf;
    } else {
      const double g = chk.opt_k_minus_1 / chk.opt_k - 1.0;
      r.irreducible_gamma = detail::step_down_until(
          g, [&](double v) { return chk.opt_k_minus_1 >= (1.0 + v) * chk.opt_k; });
    }
  }
  if (requested_beta) r.witnesses = check_beta_distributed(x, parts, *requested_beta).witnesses;
  return r;
}

struct CheapExpensiveSplit {
  std::vector<std::size_t> expensive;
  std::vector<std::size_t> cheap;
  std::size_t t = 0;
  double threshold = 0.0;
};

inline double expensive_cluster_bound(double beta, double epsilon) { return std::ceil(4096.0 / (beta * epsilon)); }

// Cluster i is cheap when Delta(X_i) <= beta * eps * OPT / 4^6.
inline CheapExpensiveSplit split_cheap_expensive(std::span<const Point> x, const Clustering& parts, double beta,
                                                 double epsilon) {
  if (!(beta > 0.0) || !(epsilon > 0.0)) throw InvalidArgument("cheap/expensive split: beta, epsilon must be positive");
  const auto s = detail::cluster_stats(x, parts);
  CheapExpensiveSplit out;
  out.threshold = beta * epsilon * s.opt / 4096.0;
  for (std::size_t i = 0; i < parts.size(); ++i) (s.delta[i] > out.threshold ? out.expensive : out.cheap).push_back(i);
  out.t = out.expensive.size();
  return out;
}

// t = ceil(4^6 / (beta eps)), clamped to k.
inline std::size_t default_expensive_count(double beta, double epsilon, std::size_t k) {
  const double t = expensive_cluster_bound(beta, epsilon);
  return t >= static_cast<double>(k) ? k : static_cast<std::size_t>(t);
}

struct GapInstance {
  Dataset data;
  Clustering optimal;
  double opt2 = 0.0;
  double merged_cost = 0.0;
};

// n points in n+1 dimensions: point i is the unit vector e_i with last
// coordinate +eps for the first half and -eps for the second half.
inline GapInstance gen_gap_instance(std::size_t n, double epsilon) {
  if (n < 4 || n % 2 != 0) throw InvalidArgument("gap instance: n must be even and >= 4");
  if (!(epsilon > 0.0)) throw InvalidArgument("gap instance: epsilon must be positive");
  GapInstance g;
  g.optimal.assign(2, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> c(n + 1, 0.0);
    c[i] = 1.0;
    const bool first = i < n / 2;
    c[n] = first ? epsilon : -epsilon;
    g.data.points.emplace_back(std::move(c));
    g.optimal[first ? 0 : 1].push_back(i);
  }
  const double nn = static_cast<double>(n);
  g.opt2 = nn - 2.0;
  g.merged_cost = nn * (1.0 + 2.0 * epsilon * epsilon);
  return g;
}

// Cheap-cluster subroutine: extends Q_init to a k-center solution, or fails.
using CheapSolver =
    std::function<std::optional<CenterSet>(std::span<const Point> x, std::size_t k, double epsilon, const CenterSet& q_init)>;

// Desk-scale stand-in: labels each point 0 ("served by Q_init") or one of
// the k - |Q_init| new clusters, takes centroids of the new clusters, and
// keeps the labeling with the smallest Phi. Exhaustive, so it only runs
// within the oracle guard.
inline CheapSolver brute_force_cheap_solver(OracleLimit limit = {.max_n = 64, .max_k = 64}) {
  return [limit](std::span<const Point> x, std::size_t k, double, const CenterSet& q_init) -> std::optional<CenterSet> {
    if (q_init.size() > k) return std::nullopt;
    const std::size_t extra = k - q_init.size();
    if (extra == 0) return q_init;
    limit.check(x.size(), k, extra + 1);
    std::optional<CenterSet> best;
    double best_cost = std::numeric_limits<double>::infinity();
    detail::for_each_labeling(x.size(), extra + 1, [&](const std::vector<std::size_t>& label) {
      CenterSet c = q_init;
      for (std::size_t g = 1; g <= extra; ++g) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < x.size(); ++i)
          if (label[i] == g) members.push_back(i);
        if (!members.empty()) c.centers.push_back(centroid_of(x, members));
      }
      if (c.empty()) return true;
      const double cost = phi_cost(c, x);
      if (cost < best_cost) {
        best_cost = cost;
        best = std::move(c);
      }
      return true;
    });
    return best;
  };
}

struct FasterPtasOptions {
  // Overrides the expensive-cluster count; clamped to k either way.
  std::optional<std::size_t> t;
  // List generation settings; t is filled in by the driver.
  GoodCentersConfig list = GoodCentersConfig::desk(1, 0.5, 8, 2, 4, 64);
  std::size_t oversample = 0;
  // Known optimum for certifying (1 + eps) success.
  std::optional<double> opt_star;
  std::size_t workers = 1;
};

struct FasterPtasResult {
  std::optional<CenterSet> centers;  // nullopt: every attempt failed
  double cost = std::numeric_limits<double>::infinity();
  bool certified = false;
  std::size_t t = 0;
  std::size_t attempts = 0;
  std::size_t list_size = 0;
};

// For each candidate set of expensive-cluster centers, ask the cheap solver
// to complete it; return the first completion certified within (1 + eps) of
// opt_star, else the cheapest completion found.
inline FasterPtasResult faster_ptas(std::span<const Point> x, std::size_t k, double epsilon, double beta,
                                    const CheapSolver& solver, Rng& rng, FasterPtasOptions opt = {}) {
  if (x.empty()) throw EmptyInput("faster_ptas: empty dataset");
  if (k < 1) throw InvalidArgument("faster_ptas: k must be >= 1");
  if (!solver) throw InvalidArgument("faster_ptas: no cheap-cluster solver");
  FasterPtasResult out;
  out.t = std::min(opt.t.value_or(default_expensive_count(beta, epsilon, k)), k);

  auto consider = [&](const CenterSet& q_init) {
    ++out.attempts;
    auto c = solver(x, k, epsilon, q_init);
    if (!c || c->empty()) return false;
    const double cost = phi_cost(*c, x);
    if (cost < out.cost) {
      out.cost = cost;
      out.centers = std::move(*c);
    }
    if (opt.opt_star && cost <= (1.0 + epsilon) * *opt.opt_star) {
      out.certified = true;
      return true;
    }
    return false;
  };

  if (out.t == 0) {
    consider(CenterSet{});
    return out;
  }
  const SeedSolution seed = d2_seed(x, std::span<const double>{}, k, opt.oversample, rng);
  GoodCentersConfig cfg = opt.list;
  cfg.t = out.t;
  cfg.epsilon = epsilon;
  const CandidateList list = good_centers(x, seed.centers, cfg, rng, opt.workers);
  out.list_size = list.size();
  if (list.empty()) throw EmptyInput("faster_ptas: candidate list is empty");
  for (const auto& cand : list.entries) {
    // An earlier cheaper completion would already have been certified, so
    // the stored set is the certified one.
    if (consider(cand)) break;
  }
  return out;
}

}  // namespace ckm

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <boost/rational.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>

#include "ckm/ckm.hpp"
#include "support.hpp"

using namespace ckm;
using Rational = boost::rational<long long>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

bool rel_eq(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// 1. The candidate list holds a (1+eps)-good center set on planted instances.
Outcome list_quality() {
  constexpr double eps = 0.5;
  auto cfg = GoodCentersConfig::desk(3, eps, 3, 2, 2, 1);
  cfg.copies = 2;
  cfg.exhaustive = true;
  std::size_t hits = 0;
  std::uint64_t list_total = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng gen(1000 + s);
    const auto inst = planted_gaussian(60, 3, 2, 0.3, 10.0, gen);
    if (!inst.certified_opt) return {false, fmt("instance %llu has no certified optimum", (unsigned long long)s)};
    Rng rng(s);
    Rng seed_rng(rng());
    const auto seeds = d2_seed(inst.data.points, 3, 3, seed_rng).centers;
    const auto list = good_centers(inst.data.points, seeds, cfg, rng);
    list_total += list.size();
    const auto parts = gather_parts(inst.data.points, inst.planted);
    hits += best_psi(list, parts).cost <= (1 + eps) * *inst.certified_opt;
  }
  return {hits >= 15, fmt("%zu/20 lists hold psi <= 1.5 OPT (need 15); mean |L| = %.0f", hits, list_total / 20.0)};
}

Dataset grid_dataset(Rng& rng, std::size_t n, std::size_t k) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) d.points.push_back(test::grid_point(rng, 2, 6));
  d.colors.emplace();
  d.targets.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    d.colors->push_back(static_cast<std::int64_t>(rng.uniform_index(3)));
    d.targets->push_back(static_cast<std::int64_t>(rng.uniform_index(k)));
  }
  return d;
}

Variant random_variant(Rng& rng, std::size_t kind, std::size_t n, std::size_t k) {
  switch (kind) {
    case 0: return variant::Classical{};
    case 1: return variant::RGather{1 + rng.uniform_index(n / k + 1)};
    case 2: return variant::RCapacity{1 + rng.uniform_index(n)};
    case 3: return variant::Chromatic{};
    case 4: return variant::FaultTolerant{1 + rng.uniform_index(k)};
    default: return variant::SemiSupervised{static_cast<double>(rng.uniform_index(5)) / 4.0};
  }
}

// 2. Flow partition cost equals the enumeration oracle in fixed point.
Outcome partition_exactness() {
  std::size_t mismatches = 0, feasible = 0, total = 0;
  std::string first;
  for (std::size_t kind = 0; kind < 6; ++kind) {
    Rng rng(2000 + kind);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 1 + rng.uniform_index(8);
      const std::size_t k = 1 + rng.uniform_index(3);
      const Dataset d = grid_dataset(rng, n, k);
      CenterSet c;
      for (std::size_t j = 0; j < k; ++j) c.centers.push_back(test::grid_point(rng, 2, 6));
      const Variant v = random_variant(rng, kind, n, k);
      const auto oracle = opt_constrained(d, c, v);
      const auto out = partition_solve(d, c, v);
      ++total;
      bool ok = out.feasible == oracle.feasible();
      if (ok && out.feasible) {
        ++feasible;
        ok = out.fixed_cost == oracle.fixed_cost && check_assignment(d, k, v, out.assignment).empty();
      }
      if (!ok) {
        ++mismatches;
        if (first.empty()) first = fmt(" (first: %s trial %d)", variant_name(v).c_str(), t);
      }
    }
  }
  return {mismatches == 0,
          fmt("%zu/%zu instances disagree with the oracle; %zu feasible compared%s", mismatches, total, feasible,
              first.c_str())};
}

CompressedPlan compressed_plan(const Dataset& d, const CenterSet& c, const Variant& v, double eps) {
  const bool labels = std::holds_alternative<variant::SemiSupervised>(v);
  const BucketingOptions opt{eps, labels, std::nullopt};
  if (std::holds_alternative<variant::Chromatic>(v)) {
    std::map<std::int64_t, CompressedGraph> by_color;
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto [it, fresh] = by_color.try_emplace((*d.colors)[i], c, opt);
      it->second.add(d.points[i]);
    }
    return CompressedPlan::solve_by_color(std::move(by_color));
  }
  std::span<const std::int64_t> tg;
  if (labels) tg = *d.targets;
  return CompressedPlan::solve(build_compressed(d.points, c, opt, tg), v);
}

// 3. Compressed-graph flow cost tracks the exact graph; bucket weights are sound.
Outcome hyperbucket_fidelity() {
  std::size_t out_of_band = 0, compared = 0, violations = 0, edges = 0;
  double worst = 0.0;
  for (double eps : {0.1, 0.5}) {
    Rng rng(eps < 0.2 ? 3001 : 3005);
    for (std::size_t kind = 0; kind < 6; ++kind) {
      for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.uniform_index(7), k = 2 + rng.uniform_index(2);
        Dataset d;
        d.points = test::random_points(rng, n, 2);
        d.colors.emplace();
        d.targets.emplace();
        for (std::size_t i = 0; i < n; ++i) {
          d.colors->push_back(static_cast<std::int64_t>(rng.uniform_index(2)));
          d.targets->push_back(static_cast<std::int64_t>(rng.uniform_index(k)));
        }
        CenterSet c;
        c.centers = test::random_points(rng, k, 2);
        Variant v;
        switch (kind) {
          case 0: v = variant::Classical{}; break;
          case 1: v = variant::RGather{1 + rng.uniform_index(n / k + 1)}; break;
          case 2: v = variant::RCapacity{(n + k - 1) / k + rng.uniform_index(2)}; break;
          case 3: v = variant::Chromatic{}; break;
          case 4: v = variant::FaultTolerant{1 + rng.uniform_index(k)}; break;
          default: v = variant::SemiSupervised{0.5}; break;
        }
        const auto exact = partition_solve(d, c, v);
        const auto plan = compressed_plan(d, c, v, eps);
        if (plan.feasible() != exact.feasible) {
          ++out_of_band;
          continue;
        }
        if (!exact.feasible) continue;
        ++compared;
        const double ratio = exact.cost == 0.0 ? (plan.cost() == 0.0 ? 1.0 : INFINITY)
                                               : std::max(plan.cost() / exact.cost, exact.cost / plan.cost());
        worst = std::max(worst, ratio - 1.0);
        if (ratio > 1 + 3 * eps + 1e-12) ++out_of_band;
      }
    }
    Rng big(3100 + static_cast<std::uint64_t>(eps * 10));
    const auto inst = planted_gaussian(500, 3, 2, 1.5, 8.0, big);
    const auto& x = inst.data.points;
    const CenterSet c{{x[3], x[7], x[11]}};
    const auto g = build_compressed(x, c, BucketingOptions{eps, false, std::nullopt});
    for (const auto& p : x) {
      const auto idx = g.find(g.key_of(p));
      for (std::size_t j = 0; j < c.size(); ++j) {
        ++edges;
        if (!idx) {
          ++violations;
          continue;
        }
        const double s = squared_dist(p, c[j]);
        const double w = g.vertices()[*idx].weights[j];
        if (s == 0.0 ? w != 0.0 : std::abs(w - s) > eps * s) ++violations;
      }
    }
  }
  return {out_of_band == 0 && violations == 0,
          fmt("%zu/%zu flow costs outside (1+3eps) (worst relative gap %.4f); %zu/%zu edge weights outside (1+-eps)",
              out_of_band, compared, worst, violations, edges)};
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
}

// 4. Streaming matches batch, uses 4 (5) passes, space grows like log n.
Outcome streaming_equivalence() {
  auto cfg = GoodCentersConfig::desk(3, 0.5, 8, 2, 4, 48);
  cfg.copies = cfg.tau;
  std::vector<double> stream_cost, batch_cost;
  bool passes_ok = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng gen(4000 + s);
    const auto inst = planted_gaussian(120, 3, 2, 0.5, 10.0, gen);
    DatasetStream src(inst.data);
    PipelineOptions opt;
    opt.stream.chunk = 40;
    Rng a(s), b(s);
    const auto r = full_pipeline(src, 3, variant::Classical{}, cfg, a, opt);
    passes_ok &= src.passes_used() == 4 && r.space.passes == 4;
    const auto bt = batch_pipeline(inst.data, 3, variant::Classical{}, cfg, b);
    if (!r.feasible || !bt.feasible) return {false, "classical pipeline reported infeasible"};
    stream_cost.push_back(r.cost);
    batch_cost.push_back(bt.cost);
  }
  {
    Rng gen(4100);
    const auto inst = planted_gaussian(120, 3, 2, 0.5, 10.0, gen);
    DatasetStream src(inst.data);
    PipelineOptions opt;
    opt.stream.chunk = 40;
    opt.remove_aspect = true;
    Rng rng(1);
    const auto r = full_pipeline(src, 3, variant::Classical{}, cfg, rng, opt);
    passes_ok &= src.passes_used() == 5 && r.space.passes == 5;
  }
  const double ms = median(stream_cost), mb = median(batch_cost);
  const double gap = std::abs(ms - mb) / mb;

  std::vector<double> logn, peak;
  std::string peaks;
  for (std::size_t n : {1000, 10000, 100000}) {
    std::vector<double> runs;
    for (std::uint64_t s = 0; s < 3; ++s) {
      Rng gen(4200 + s);
      const auto inst = planted_gaussian(n, 3, 2, 0.5, 10.0, gen);
      DatasetStream src(inst.data);
      PipelineOptions opt;
      Rng rng(s);
      runs.push_back(static_cast<double>(full_pipeline(src, 3, variant::Classical{}, cfg, rng, opt).space.peak_points));
    }
    logn.push_back(std::log2(static_cast<double>(n)));
    peak.push_back(median(runs));
    peaks += fmt(" %zu:%.0f", n, peak.back());
  }
  const double r2 = r_squared(logn, peak);
  return {gap <= 0.05 && passes_ok && r2 >= 0.9,
          fmt("median cost stream %.4f vs batch %.4f (gap %.2f%%, need <= 5%%); passes %s; peak points%s; "
              "log2(n) fit R^2 = %.4f (need >= 0.9)",
              ms, mb, 100 * gap, passes_ok ? "4/5 as required" : "WRONG", peaks.c_str(), r2)};
}

std::map<int, Rational> reservoir_tree(const std::vector<Rational>& w) {
  std::map<int, Rational> out;
  std::function<void(std::size_t, Reservoir<int, Rational>, Rational)> walk =
      [&](std::size_t i, Reservoir<int, Rational> r, Rational prob) {
        if (i == w.size()) {
          if (r.held()) out[*r.held()] += prob;
          return;
        }
        if (w[i] == Rational(0)) {
          r.offer(static_cast<int>(i), w[i], [](const Rational&) -> bool { throw std::logic_error("coin"); });
          walk(i + 1, r, prob);
          return;
        }
        for (bool outcome : {true, false}) {
          Reservoir<int, Rational> branch = r;
          Rational p;
          branch.offer(static_cast<int>(i), w[i], [&](const Rational& q) {
            p = q;
            return outcome;
          });
          walk(i + 1, branch, prob * (outcome ? p : Rational(1) - p));
        }
      };
  walk(0, Reservoir<int, Rational>{}, Rational(1));
  return out;
}

// The three chi-square experiments of criterion 5; returns how many reject at 99%.
int chi_square_rejections(Rng& rng) {
  constexpr int trials = 100000;
  int rejected = 0;
  const PointList two{{1, 0, 0}, {1, 1, 1}};
  {
    std::vector<std::size_t> counts(2, 0);
    for (auto i : d2_sample(two, CenterSet{{{0, 0, 0}}}, trials, rng)) ++counts[i];
    rejected += !test::chi_square_accepts(counts, {0.25, 0.75});
  }
  const PointList x{{1, 0}, {0, 2}, {3, 0}, {0, 0}, {1, 1}};
  const CenterSet c{{{0, 0}}};
  const auto exact = d2_distribution(x, c);
  {
    std::vector<std::size_t> counts(x.size(), 0);
    for (int t = 0; t < trials; ++t) {
      Reservoir<std::size_t> r;
      for (std::size_t i = 0; i < x.size(); ++i) r.offer(i, nearest_center(x[i], c).sqdist, rng);
      ++counts[*r.held()];
    }
    rejected += !test::chi_square_accepts(counts, exact);
  }
  {
    std::vector<std::size_t> counts(10, 0);
    for (int t = 0; t < trials; ++t) {
      Reservoir<std::size_t> r;
      for (std::size_t i = 0; i < 10; ++i) r.offer(i, 1.0, rng);
      ++counts[*r.held()];
    }
    rejected += !test::chi_square_accepts(counts, std::vector<double>(10, 0.1));
  }
  return rejected;
}

// 5. Sampler statistics and exact decision trees.
Outcome sampler_statistics() {
  Rng master(5000);
  Rng primary = master.split(0);
  const int rejected = chi_square_rejections(primary);
  // Each test rejects a correct sampler 1% of the time; replicate to show the
  // observed rate sits at that level.
  constexpr int replications = 100;
  int replicated = 0;
  for (int r = 0; r < replications; ++r) {
    Rng rep = master.split(1 + static_cast<std::uint64_t>(r));
    replicated += chi_square_rejections(rep);
  }
  int tree_mismatch = 0, trees = 0;
  Rng wr(5001);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Rational> w(n);
      Rational total(0);
      for (auto& v : w) {
        v = Rational(static_cast<long long>(wr.uniform_index(5)), 1 + static_cast<long long>(wr.uniform_index(4)));
        total += v;
      }
      const auto dist = reservoir_tree(w);
      ++trees;
      for (std::size_t i = 0; i < n; ++i) {
        const Rational expected = total == Rational(0) ? Rational(0) : w[i] / total;
        const auto it = dist.find(static_cast<int>(i));
        if ((it == dist.end() ? Rational(0) : it->second) != expected) {
          ++tree_mismatch;
          break;
        }
      }
    }
  }
  return {rejected == 0 && tree_mismatch == 0,
          fmt("%d/3 chi-square tests rejected at 99%% over 1e5 draws (rejection rate over %d replications: %.2f%%, "
              "nominal 1%%); %d/%d rational decision trees differ from w_i/W",
              rejected, replications, 100.0 * replicated / (3 * replications), tree_mismatch, trees)};
}

// 6. The gap instance.
Outcome gap_instance() {
  constexpr double eps = 0.1;
  std::string bad;
  for (std::size_t n : {4, 6, 8}) {
    const auto g = gen_gap_instance(n, eps);
    const double opt = opt_kmeans(g.data.points, 2).cost;
    const double merged = reassignment_cost(g.data.points, g.optimal, 0, 1);
    const double nn = static_cast<double>(n);
    if (!rel_eq(opt, nn - 2)) bad += fmt(" n=%zu OPT2=%.17g", n, opt);
    if (!rel_eq(merged, nn * (1 + 2 * eps * eps))) bad += fmt(" n=%zu merged=%.17g", n, merged);
    if (!check_beta_distributed(g.data.points, g.optimal, 0.5).pass) bad += fmt(" n=%zu beta=1/2 fails", n);
  }
  const auto g8 = gen_gap_instance(8, eps);
  const bool weak_fails = !check_weak_deletion(g8.data.points, g8.optimal, 0.5).pass;
  if (!weak_fails) bad += " n=8 weak deletion at 0.5 passes";
  return {bad.empty(), bad.empty() ? "OPT2 = n-2 and merged = n(1+2eps^2) for n in {4,6,8}; beta=1/2 passes; "
                                     "gamma=0.5 weak deletion fails at n=8"
                                   : "mismatch:" + bad};
}

// 7. irreducible => weak deletion => (gamma/4)-distributed.
Outcome implication_chain() {
  Rng rng(7000);
  std::size_t counterexamples = 0, hits = 0, instances = 0;
  while (instances < 50) {
    const std::size_t n = 5 + rng.uniform_index(4), k = 2 + rng.uniform_index(2);
    PointList x;
    if (instances % 2) {
      x = test::random_points(rng, n, 2);
    } else {
      x = planted_gaussian(n, k, 2, 0.5 + rng.uniform01(), 4.0, rng).data.points;
    }
    const auto oracle = opt_kmeans(x, k);
    bool empty = false;
    for (const auto& p : oracle.clustering) empty |= p.empty();
    if (empty) continue;
    ++instances;
    for (double gamma : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      if (!check_irreducible(x, k, gamma).pass) continue;
      ++hits;
      const bool weak = check_weak_deletion(x, oracle.clustering, gamma).pass;
      const bool dist = check_beta_distributed(x, oracle.clustering, gamma / 4.0).pass;
      counterexamples += !weak || !dist;
    }
  }
  return {counterexamples == 0 && hits > 0,
          fmt("%zu counterexamples over %zu instances (%zu irreducible (instance, gamma) pairs checked)",
              counterexamples, instances, hits)};
}

// 8. Assignment solver versus t! enumeration.
Outcome matching_oracle() {
  Rng rng(8000);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 6;
    CostMatrix<long long> m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = static_cast<long long>(rng.uniform_index(1000));
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    long long best = std::numeric_limits<long long>::max();
    do {
      long long s = 0;
      for (std::size_t i = 0; i < n; ++i) s += m(i, p[i]);
      best = std::min(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    const auto r = min_cost_matching(m);
    long long realized = 0;
    for (std::size_t i = 0; i < n; ++i) realized += m(i, r.row_to_col[i]);
    mismatches += r.cost != best || realized != best;
  }
  return {mismatches == 0, fmt("%zu/100 integer matrices (t = 1..6) differ from enumeration", mismatches)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"list quality on planted instances", list_quality},
      {"partition exactness", partition_exactness},
      {"hyperbucket fidelity", hyperbucket_fidelity},
      {"streaming equivalence", streaming_equivalence},
      {"sampler statistics", sampler_statistics},
      {"gap instance", gap_instance},
      {"stability implication chain", implication_chain},
      {"matching oracle", matching_oracle},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/hyperbucket.hpp"
#include "ckm/listgen.hpp"
#include "ckm/parallel.hpp"
#include "ckm/partition.hpp"
#include "ckm/random.hpp"
#include "ckm/sampling.hpp"
#include "ckm/seeding.hpp"
#include "ckm/stream.hpp"

namespace ckm {

enum class SelectMode { argmin, ranges };

// Range index of a cost; see select_best.
inline std::int64_t range_of(double cost, double epsilon, double lambda) {
  if (cost <= 0.0) return std::numeric_limits<std::int64_t>::max();
  if (cost >= lambda) return 0;
  const double shrink = 1.0 - epsilon;
  auto i = static_cast<std::int64_t>(std::floor(std::log(cost / lambda) / std::log(shrink)));
  while (i > 0 && !(cost <= std::pow(shrink, static_cast<double>(i)) * lambda)) --i;
  while (!(cost > std::pow(shrink, static_cast<double>(i + 1)) * lambda)) ++i;
  return i;
}

// Winner among per-candidate costs (+infinity marks an infeasible
// candidate); nullopt when every candidate is infeasible.
//
// ranges: costs are hashed into S_i = ((1-eps)^(i+1) Lambda, (1-eps)^i Lambda]
// (costs above Lambda are clipped into S_0, zero costs sit below every
// range) and the first index of the deepest non-empty range wins.
inline std::optional<std::size_t> select_best(std::span<const double> costs, double epsilon, double lambda,
                                              SelectMode mode = SelectMode::argmin) {
  if (costs.empty()) throw EmptyInput("select_best: empty cost list");
  std::optional<std::size_t> best;
  if (mode == SelectMode::argmin || !(lambda > 0.0)) {
    for (std::size_t i = 0; i < costs.size(); ++i)
      if (std::isfinite(costs[i]) && (!best || costs[i] < costs[*best])) best = i;
    return best;
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("select_best: epsilon must lie in (0, 1)");
  std::int64_t deepest = -1;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i])) continue;
    const std::int64_t r = range_of(costs[i], epsilon, lambda);
    if (r > deepest) {
      deepest = r;
      best = i;
    }
  }
  return best;
}

struct StreamOptions {
  // Raw points buffered per merge-reduce chunk.
  std::size_t chunk = 256;
  std::size_t oversample = 0;
  SpaceMeter* meter = nullptr;
  std::size_t workers = 1;
};

struct TwoPassResult {
  SeedSolution seed;
  CandidateList list;
};

// Pass 1 seeds by merge-reduce; pass 2 runs eta*t*repetitions independent
// weighted reservoirs (weight = D^2 w.r.t. the seeds) to draw the samples
// of every repetition at once. Steps 4-6 then run offline. When the whole
// stream has zero potential the samples come from parallel uniform
// reservoirs instead; those only ever hold points equal to a seed, so they
// store seed indices rather than points.
inline TwoPassResult two_pass_good_centers(StreamSource& src, std::size_t k, const GoodCentersConfig& cfg, Rng& rng,
                                           const StreamOptions& opt = {}) {
  cfg.validate();
  SpaceMeter* meter = opt.meter;
  TwoPassResult out;

  if (meter) meter->begin_pass("seed");
  Rng seed_rng(rng());
  out.seed = merge_reduce_seed(src, k, opt.chunk, seed_rng, opt.oversample, meter);
  const CenterSet& seeds = out.seed.centers;
  MeterLease seed_lease(meter, seeds.size());

  if (meter) meter->begin_pass("sample");
  const Rng base(rng());
  const std::size_t per_rep = cfg.samples_per_repetition();
  const std::size_t total = per_rep * cfg.repetitions;
  std::vector<Rng> d2_rng, uni_rng;
  d2_rng.reserve(total);
  uni_rng.reserve(total);
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const Rng rep_rng = base.split(rep);
    const Rng d2_root = rep_rng.split(0);
    const Rng uni_root = rep_rng.split(2);
    for (std::size_t s = 0; s < per_rep; ++s) {
      d2_rng.push_back(d2_root.split(s));
      uni_rng.push_back(uni_root.split(s));
    }
  }
  std::vector<Reservoir<std::size_t>> d2_res(total), uni_res(total);
  std::vector<Point> held(total);
  std::vector<std::size_t> uni_seed(total, 0);
  MeterLease res_lease(meter, 0);
  if (meter) meter->add_words(2 * total);
  double potential = 0.0;
  std::size_t pos = 0;
  std::size_t filled = 0;
  for_each_record(src, [&](const StreamRecord& rec) {
    const Nearest nn = nearest_center(rec.point, seeds);
    potential += nn.sqdist;
    for (std::size_t r = 0; r < total; ++r) {
      const bool had = d2_res[r].held().has_value();
      d2_res[r].offer(pos, nn.sqdist, d2_rng[r]);
      if (d2_res[r].held() == pos) {
        held[r] = rec.point;
        if (!had) ++filled;
      }
      uni_res[r].offer(pos, 1.0, uni_rng[r]);
      if (uni_res[r].held() == pos) uni_seed[r] = nn.index;
    }
    if (filled != res_lease.points()) res_lease.resize(filled);
    ++pos;
  });
  if (pos == 0) throw EmptyInput("two_pass_good_centers: empty stream");
  if (!(potential > 0.0)) {
    for (std::size_t r = 0; r < total; ++r) held[r] = seeds[uni_seed[r]];
    res_lease.resize(total);
  }

  // Offline steps 4-6, repetition by repetition.
  std::vector<CandidateList> per(cfg.repetitions);
  parallel_for(cfg.repetitions, opt.workers, [&](std::size_t rep) {
    Rng tuple_rng = base.split(rep).split(1);
    SampleMultiset m;
    m.seeds = &seeds;
    m.copies = cfg.copies_per_center();
    for (std::size_t s = 0; s < per_rep; ++s) {
      const std::size_t r = rep * per_rep + s;
      m.samples.push_back(held[r]);
      m.sample_indices.push_back(potential > 0.0 ? *d2_res[r].held() : *uni_res[r].held());
    }
    candidates_from_multiset(m, rep, cfg, tuple_rng, per[rep]);
  });
  out.list.t = cfg.t;
  out.list.tau = cfg.tau;
  for (auto& part : per) {
    for (auto& e : part.entries) out.list.entries.push_back(std::move(e));
    for (auto& p : part.provenance) out.list.provenance.push_back(std::move(p));
    for (auto& r : part.repetitions) out.list.repetitions.push_back(std::move(r));
  }
  // The list itself is resident until the caller is done with it; charge
  // it here so the peak covers it.
  MeterLease list_lease(meter, out.list.size() * cfg.t);
  return out;
}

// Unique entries in first-occurrence order.
inline std::vector<CenterSet> dedup_candidates(const CandidateList& list) {
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<CenterSet> out;
  for (const auto& e : list.entries) {
    std::vector<double> flat;
    for (const auto& c : e.centers) flat.insert(flat.end(), c.coords().begin(), c.coords().end());
    if (seen.emplace(std::move(flat), out.size()).second) out.push_back(e);
  }
  return out;
}

struct PipelineOptions {
  StreamOptions stream;
  // Bucket resolution of the compressed graphs.
  double bucket_epsilon = 0.1;
  // Extra pass computing d* so that aspect-ratio removal can bound space.
  bool remove_aspect = false;
  SelectMode select = SelectMode::argmin;
  int precision_bits = kDefaultPrecisionBits;
};

struct PipelineResult {
  bool feasible = false;
  CenterSet centers;
  Assignment assignment;
  double cost = std::numeric_limits<double>::infinity();
  // Winner's objective on the compressed graph.
  double compressed_cost = std::numeric_limits<double>::infinity();
  std::size_t winner = 0;
  std::size_t list_size = 0;
  std::size_t candidates = 0;
  SeedSolution seed;
  SpaceReport space;
};

// End-to-end streaming pipeline:
//   pass 1 seed, pass 2 sample (list generation),
//   [optional pass: d* per candidate],
//   pass 3 build one compressed graph per candidate (per scale guess with
//          aspect removal), solve them offline and keep the winner's plan,
//   pass 4 assign every point through the winner's residual flow.
inline PipelineResult full_pipeline(StreamSource& src, std::size_t k, const Variant& v, const GoodCentersConfig& cfg,
                                    Rng& rng, const PipelineOptions& opt = {}) {
  if (std::holds_alternative<variant::Chromatic>(v))
    throw InvalidArgument("full_pipeline: chromatic data is not supported by the streaming pipeline");
  validate_variant(v, k);
  if (cfg.t != k) throw InvalidArgument("full_pipeline: the list must produce k-center sets (t = k)");
  const std::size_t start_passes = src.passes_used();
  SpaceMeter local_meter;
  SpaceMeter* meter = opt.stream.meter ? opt.stream.meter : &local_meter;
  StreamOptions sopt = opt.stream;
  sopt.meter = meter;
  const std::size_t workers = sopt.workers;

  PipelineResult out;
  TwoPassResult tp = two_pass_good_centers(src, k, cfg, rng, sopt);
  out.seed = tp.seed;
  out.list_size = tp.list.size();
  const std::vector<CenterSet> cands = dedup_candidates(tp.list);
  tp.list = {};
  out.candidates = cands.size();
  MeterLease cand_lease(meter, cands.size() * k);
  MeterLease seed_lease(meter, out.seed.centers.size());

  std::vector<double> d_star(cands.size(), 0.0);
  if (opt.remove_aspect) {
    meter->begin_pass("aspect");
    meter->add_words(cands.size());
    for_each_record(src, [&](const StreamRecord& rec) {
      for (std::size_t c = 0; c < cands.size(); ++c)
        d_star[c] = std::max(d_star[c], std::sqrt(nearest_center(rec.point, cands[c]).sqdist));
    });
  }

  // One graph per (candidate, guess).
  const bool labels = std::holds_alternative<variant::SemiSupervised>(v);
  std::vector<CompressedGraph> graphs;
  std::vector<std::size_t> owner;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    BucketingOptions b;
    b.epsilon = opt.bucket_epsilon;
    b.use_labels = labels;
    std::vector<double> guesses;
    if (opt.remove_aspect) guesses = aspect_guesses(cands[c], d_star[c]);
    if (guesses.empty()) {
      graphs.emplace_back(cands[c], b);
      owner.push_back(c);
    }
    for (double u : guesses) {
      b.aspect = AspectGuess{u, out.seed.points_seen};
      graphs.emplace_back(cands[c], b);
      owner.push_back(c);
    }
  }

  meter->begin_pass("graph");
  MeterLease graph_lease(meter, 0);
  auto charge = [&] {
    std::size_t s = 0;
    for (const auto& g : graphs) s += g.vertices().size();
    if (s != graph_lease.points()) graph_lease.resize(s);
  };
  if (workers <= 1) {
    for_each_record(src, [&](const StreamRecord& rec) {
      for (auto& g : graphs) g.add(rec.point, labels ? rec.target : std::nullopt);
      charge();
    });
  } else {
    // Builders share a block buffer of the stream; each graph sees the
    // records in stream order, so the result matches the serial build.
    constexpr std::size_t kBlock = 4096;
    std::vector<StreamRecord> block;
    MeterLease block_lease(meter, 0);
    auto flush = [&] {
      parallel_for(graphs.size(), workers, [&](std::size_t gi) {
        for (const auto& rec : block) graphs[gi].add(rec.point, labels ? rec.target : std::nullopt);
      });
      block.clear();
      charge();
    };
    for_each_record(src, [&](const StreamRecord& rec) {
      block.push_back(rec);
      if (block.size() > block_lease.points()) block_lease.resize(block.size());
      if (block.size() == kBlock) flush();
    });
    flush();
  }

  // Offline: solve every graph, keep the best guess per candidate.
  std::vector<CompressedPlan> plans(graphs.size());
  parallel_for(graphs.size(), workers,
               [&](std::size_t gi) { plans[gi] = CompressedPlan::solve(graphs[gi], v, opt.precision_bits); });
  std::vector<double> cand_cost(cands.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> cand_plan(cands.size(), SIZE_MAX);
  for (std::size_t gi = 0; gi < plans.size(); ++gi) {
    if (!plans[gi].feasible()) continue;
    const std::size_t c = owner[gi];
    if (plans[gi].cost() < cand_cost[c]) {
      cand_cost[c] = plans[gi].cost();
      cand_plan[c] = gi;
    }
  }
  const auto win = select_best(cand_cost, opt.bucket_epsilon, out.seed.cost, opt.select);
  if (!win) {
    out.space = meter->report(src.passes_used() - start_passes);
    return out;
  }
  out.winner = *win;
  out.centers = cands[*win];
  out.compressed_cost = cand_cost[*win];
  CompressedPlan plan = std::move(plans[cand_plan[*win]]);
  plans.clear();
  graphs.clear();
  graph_lease.resize(plan.num_vertices());

  meter->begin_pass("assign");
  out.assignment = assign_from_plan(src, plan);
  out.cost = out.assignment.cost;
  out.feasible = true;
  out.space = meter->report(src.passes_used() - start_passes);
  return out;
}

struct BatchResult {
  bool feasible = false;
  CenterSet centers;
  Assignment assignment;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t winner = 0;
  std::size_t list_size = 0;
  std::size_t candidates = 0;
  SeedSolution seed;
};

// In-memory pipeline: D^2 seeding, list generation, exact partition cost for
// every distinct candidate, winner by argmin (or ranges), exact assignment.
inline BatchResult batch_pipeline(const Dataset& x, std::size_t k, const Variant& v, const GoodCentersConfig& cfg,
                                  Rng& rng, std::size_t oversample = 0, std::size_t workers = 1,
                                  SelectMode select = SelectMode::argmin, double select_epsilon = 0.1) {
  x.validate();
  if (x.empty()) throw EmptyInput("batch_pipeline: empty dataset");
  validate_variant(v, k);
  if (cfg.t != k) throw InvalidArgument("batch_pipeline: the list must produce k-center sets (t = k)");
  BatchResult out;
  Rng seed_rng(rng());
  out.seed = d2_seed(x.points, std::span<const double>{}, k, oversample, seed_rng);
  const CandidateList list = good_centers(x.points, out.seed.centers, cfg, rng, workers);
  out.list_size = list.size();
  const auto cands = dedup_candidates(list);
  out.candidates = cands.size();
  std::vector<double> costs(cands.size());
  parallel_for(cands.size(), workers, [&](std::size_t c) { costs[c] = partition_cost(x, cands[c], v); });
  const auto win = select_best(costs, select_epsilon, out.seed.cost, select);
  if (!win) return out;
  out.winner = *win;
  out.centers = cands[*win];
  out.assignment = partition_assign(x, out.centers, v);
  out.cost = out.assignment.cost;
  out.feasible = true;
  return out;
}

}  // namespace ckm

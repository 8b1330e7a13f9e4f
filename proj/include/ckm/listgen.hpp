#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/parallel.hpp"
#include "ckm/random.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

enum class Preset { paper, desk };

// Parameters of list generation.
//
// The paper preset fixes the worst-case constants
//   eta = ceil(2^16 * alpha * t / eps^4), tau = ceil(128 / eps), 2^t repetitions
// and enumerates every tuple of disjoint tau-subsets of the multiset M. Those
// constants are far beyond desk scale, so the desk preset takes explicit
// values and (by default) draws `subset_budget` random disjoint tuples per
// repetition instead of enumerating them.
struct GoodCentersConfig {
  std::size_t t = 1;
  double epsilon = 0.5;
  double alpha = 1.0;
  Preset preset = Preset::desk;
  std::size_t eta = 0;
  std::size_t tau = 0;
  std::size_t repetitions = 0;
  std::size_t subset_budget = 1;
  // Copies of each seed center appended to M; unset means ceil(128 t / eps).
  std::optional<std::size_t> copies;
  // Desk only: enumerate all tuples instead of sampling subset_budget of them.
  bool exhaustive = false;
  // Refuse exhaustive runs whose list would exceed this many entries.
  std::uint64_t max_list_size = 5'000'000;

  static GoodCentersConfig paper(std::size_t t, double epsilon, double alpha) {
    GoodCentersConfig c;
    c.t = t;
    c.epsilon = epsilon;
    c.alpha = alpha;
    c.preset = Preset::paper;
    c.eta = static_cast<std::size_t>(std::ceil(65536.0 * alpha * static_cast<double>(t) / std::pow(epsilon, 4)));
    c.tau = static_cast<std::size_t>(std::ceil(128.0 / epsilon));
    c.repetitions = std::size_t{1} << t;
    return c;
  }

  static GoodCentersConfig desk(std::size_t t, double epsilon, std::size_t eta, std::size_t tau,
                                std::size_t repetitions, std::size_t subset_budget) {
    GoodCentersConfig c;
    c.t = t;
    c.epsilon = epsilon;
    c.preset = Preset::desk;
    c.eta = eta;
    c.tau = tau;
    c.repetitions = repetitions;
    c.subset_budget = subset_budget;
    return c;
  }

  std::size_t copies_per_center() const {
    if (copies) return *copies;
    return static_cast<std::size_t>(std::ceil(128.0 * static_cast<double>(t) / epsilon));
  }
  std::size_t samples_per_repetition() const { return eta * t; }
  bool enumerates() const { return preset == Preset::paper || exhaustive; }

  void validate() const {
    if (t < 1) throw InvalidArgument("good_centers: t must be >= 1");
    if (!(epsilon > 0.0 && epsilon <= 0.5)) throw InvalidArgument("good_centers: epsilon must lie in (0, 1/2]");
    if (!(alpha >= 1.0)) throw InvalidArgument("good_centers: alpha must be >= 1");
    if (eta < 1 || tau < 1 || repetitions < 1) throw InvalidArgument("good_centers: eta, tau, repetitions must be >= 1");
    if (subset_budget < 1) throw InvalidArgument("good_centers: subset_budget must be >= 1");
    if (preset == Preset::paper) {
      const auto ref = paper(t, epsilon, alpha);
      if (eta != ref.eta || tau != ref.tau || repetitions != ref.repetitions || copies)
        throw InvalidArgument("good_centers: the paper preset does not take overrides");
    }
  }
};

// The multiset M of one repetition: eta*t sampled points followed by
// `copies` copies of each seed center. Position p < samples.size() is a
// sample; any later position is a copy of center (p - samples.size()) / copies.
struct SampleMultiset {
  PointList samples;
  std::vector<std::size_t> sample_indices;  // dataset/stream positions of the samples
  const CenterSet* seeds = nullptr;
  std::size_t copies = 0;

  std::size_t size() const noexcept { return samples.size() + (seeds ? seeds->size() * copies : 0); }
  const Point& at(std::size_t pos) const {
    if (pos < samples.size()) return samples[pos];
    return (*seeds)[(pos - samples.size()) / copies];
  }
};

struct CandidateProvenance {
  std::size_t repetition = 0;
  // t * tau positions into that repetition's multiset, subset by subset.
  std::vector<std::size_t> positions;
};

struct RepetitionInfo {
  std::size_t multiset_size = 0;
  std::size_t emitted = 0;
  // tau * t > |M|: no valid tuple exists.
  bool infeasible = false;
  std::vector<std::size_t> sample_indices;
  std::size_t copies_per_center = 0;
};

struct CandidateList {
  std::size_t t = 0;
  std::size_t tau = 0;
  std::vector<CenterSet> entries;
  std::vector<CandidateProvenance> provenance;
  std::vector<RepetitionInfo> repetitions;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

// |L| for a multiset of the given size: repetitions times the number of
// ordered tuples of t disjoint tau-subsets (paper preset / exhaustive), or
// repetitions * subset_budget when sampling. nullopt on uint64 overflow.
inline std::optional<std::uint64_t> list_size_bound(const GoodCentersConfig& cfg, std::size_t multiset_size) {
  if (cfg.tau * cfg.t > multiset_size) return std::uint64_t{0};
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  auto mul = [](std::uint64_t a, std::uint64_t b) -> std::optional<std::uint64_t> {
    if (a != 0 && b > kMax / a) return std::nullopt;
    return a * b;
  };
  if (!cfg.enumerates()) return mul(cfg.repetitions, cfg.subset_budget);

  std::uint64_t total = 1;
  std::size_t remaining = multiset_size;
  for (std::size_t s = 0; s < cfg.t; ++s) {
    // C(remaining, tau); each prefix product binom * num / i is itself a
    // binomial coefficient, so the division is exact.
    std::uint64_t binom = 1;
    for (std::size_t i = 1; i <= cfg.tau; ++i) {
      const std::uint64_t num = remaining - cfg.tau + i;
      const unsigned __int128 wide = static_cast<unsigned __int128>(binom) * num / i;
      if (wide > kMax) return std::nullopt;
      binom = static_cast<std::uint64_t>(wide);
    }
    auto next = mul(total, binom);
    if (!next) return std::nullopt;
    total = *next;
    remaining -= cfg.tau;
  }
  return mul(total, cfg.repetitions);
}

inline std::optional<std::uint64_t> list_size_bound_for_seeds(const GoodCentersConfig& cfg, std::size_t num_seeds) {
  return list_size_bound(cfg, cfg.samples_per_repetition() + num_seeds * cfg.copies_per_center());
}

namespace detail {

inline CenterSet centroids_of_tuple(const SampleMultiset& m, std::span<const std::size_t> positions, std::size_t t,
                                    std::size_t tau) {
  CenterSet out;
  out.centers.reserve(t);
  for (std::size_t s = 0; s < t; ++s) {
    Point mu = Point::zeros(m.at(positions[s * tau]).dim());
    for (std::size_t q = 0; q < tau; ++q) {
      const Point& p = m.at(positions[s * tau + q]);
      for (std::size_t j = 0; j < p.dim(); ++j) mu[j] += p[j];
    }
    for (std::size_t j = 0; j < mu.dim(); ++j) mu[j] /= static_cast<double>(tau);
    out.centers.push_back(std::move(mu));
  }
  return out;
}

// All ordered tuples (S_1, ..., S_t) of disjoint tau-subsets of [0, |M|),
// each subset listed in increasing order; tuples come out in lexicographic
// order of their position lists.
template <typename Emit>
void enumerate_disjoint_tuples(std::size_t m_size, std::size_t t, std::size_t tau, Emit&& emit) {
  std::vector<char> used(m_size, 0);
  std::vector<std::size_t> current;
  current.reserve(t * tau);
  auto rec = [&](auto&& self, std::size_t subset, std::size_t start) -> void {
    if (subset == t) {
      emit(std::span<const std::size_t>(current));
      return;
    }
    const std::size_t filled = current.size() - subset * tau;
    if (filled == tau) {
      self(self, subset + 1, 0);
      return;
    }
    for (std::size_t p = start; p < m_size; ++p) {
      if (used[p]) continue;
      used[p] = 1;
      current.push_back(p);
      self(self, subset, p + 1);
      current.pop_back();
      used[p] = 0;
    }
  };
  rec(rec, 0, 0);
}

}  // namespace detail

// Steps 5-6 for one repetition: turn the multiset M into candidate t-center
// sets and append them to `out`.
inline void candidates_from_multiset(const SampleMultiset& m, std::size_t repetition, const GoodCentersConfig& cfg,
                                     Rng& tuple_rng, CandidateList& out) {
  RepetitionInfo info;
  info.multiset_size = m.size();
  info.sample_indices = m.sample_indices;
  info.copies_per_center = m.copies;
  const std::size_t need = cfg.t * cfg.tau;
  if (need > m.size()) {
    info.infeasible = true;
    out.repetitions.push_back(std::move(info));
    return;
  }
  auto emit = [&](std::span<const std::size_t> positions) {
    out.entries.push_back(detail::centroids_of_tuple(m, positions, cfg.t, cfg.tau));
    out.provenance.push_back({repetition, std::vector<std::size_t>(positions.begin(), positions.end())});
    ++info.emitted;
  };
  if (cfg.enumerates()) {
    detail::enumerate_disjoint_tuples(m.size(), cfg.t, cfg.tau, emit);
  } else {
    // Partial Fisher-Yates over a scratch permutation; swaps are undone so
    // every draw starts from the identity and the tuple stream only depends
    // on tuple_rng (enlarging the budget extends it).
    std::vector<std::size_t> perm(m.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::vector<std::size_t> swapped(need);
    std::vector<std::size_t> positions(need);
    for (std::size_t b = 0; b < cfg.subset_budget; ++b) {
      for (std::size_t i = 0; i < need; ++i) {
        const std::size_t j = i + tuple_rng.uniform_index(perm.size() - i);
        std::swap(perm[i], perm[j]);
        swapped[i] = j;
        positions[i] = perm[i];
      }
      for (std::size_t i = need; i-- > 0;) std::swap(perm[i], perm[swapped[i]]);
      emit(positions);
    }
  }
  out.repetitions.push_back(std::move(info));
}

// List generation: each repetition D^2-samples eta*t points w.r.t. the seed
// centers, appends copies of every seed, and emits the centroids of disjoint
// tau-subsets of that multiset. Repetitions use independent child streams of
// one draw from `rng` and are concatenated in repetition order.
inline CandidateList good_centers(std::span<const Point> x, const CenterSet& seeds, const GoodCentersConfig& cfg,
                                  Rng& rng, std::size_t workers = 1) {
  cfg.validate();
  if (seeds.empty()) throw EmptyInput("good_centers: empty seed center set");
  if (x.empty()) throw EmptyInput("good_centers: empty dataset");
  if (cfg.enumerates()) {
    const auto bound = list_size_bound_for_seeds(cfg, seeds.size());
    if (!bound || *bound > cfg.max_list_size)
      throw InvalidArgument("good_centers: exhaustive list would exceed max_list_size");
  }

  const Rng base(rng());
  std::vector<CandidateList> per_rep(cfg.repetitions);
  parallel_for(cfg.repetitions, workers, [&](std::size_t rep) {
    Rng rep_rng = base.split(rep);
    Rng sample_rng = rep_rng.split(0);
    Rng tuple_rng = rep_rng.split(1);
    SampleMultiset m;
    m.seeds = &seeds;
    m.copies = cfg.copies_per_center();
    m.sample_indices = d2_sample(x, seeds, cfg.samples_per_repetition(), sample_rng);
    m.samples.reserve(m.sample_indices.size());
    for (std::size_t idx : m.sample_indices) m.samples.push_back(x[idx]);
    candidates_from_multiset(m, rep, cfg, tuple_rng, per_rep[rep]);
  });

  CandidateList out;
  out.t = cfg.t;
  out.tau = cfg.tau;
  for (auto& part : per_rep) {
    for (auto& e : part.entries) out.entries.push_back(std::move(e));
    for (auto& p : part.provenance) out.provenance.push_back(std::move(p));
    for (auto& r : part.repetitions) out.repetitions.push_back(std::move(r));
  }
  return out;
}

struct BestPsi {
  std::size_t index = 0;
  double cost = std::numeric_limits<double>::infinity();
};

// Entry of the list with the smallest psi against the given parts.
inline BestPsi best_psi(const CandidateList& list, std::span<const PointList> parts) {
  BestPsi best;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const double c = psi_cost(list.entries[i], parts).cost;
    if (c < best.cost) best = {i, c};
  }
  return best;
}

}  // namespace ckm

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "ckm/generators.hpp"
#include "ckm/listgen.hpp"
#include "ckm/seeding.hpp"
#include "support.hpp"

using namespace ckm;

namespace {

using Tuple = std::vector<std::size_t>;

// Brute-force ordered tuples of t disjoint tau-subsets (each subset sorted)
// by filtering every position sequence of length t*tau.
std::multiset<Tuple> brute_tuples(std::size_t m, std::size_t t, std::size_t tau) {
  std::multiset<Tuple> out;
  const std::size_t len = t * tau;
  Tuple cur(len, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == len) {
      std::set<std::size_t> seen(cur.begin(), cur.end());
      if (seen.size() != len) return;
      for (std::size_t s = 0; s < t; ++s)
        if (!std::is_sorted(cur.begin() + static_cast<long>(s * tau), cur.begin() + static_cast<long>((s + 1) * tau)) ||
            std::adjacent_find(cur.begin() + static_cast<long>(s * tau), cur.begin() + static_cast<long>((s + 1) * tau)) !=
                cur.begin() + static_cast<long>((s + 1) * tau))
          return;
      out.insert(cur);
      return;
    }
    for (std::size_t p = 0; p < m; ++p) {
      cur[pos] = p;
      rec(pos + 1);
    }
  };
  rec(0);
  return out;
}

GoodCentersConfig exhaustive(std::size_t t, std::size_t eta, std::size_t tau, std::size_t reps, std::size_t copies) {
  auto cfg = GoodCentersConfig::desk(t, 0.5, eta, tau, reps, 1);
  cfg.exhaustive = true;
  cfg.copies = copies;
  return cfg;
}

}  // namespace

TEST(GoodCentersConfig, PaperConstants) {
  const auto c = GoodCentersConfig::paper(2, 0.5, 1.0);
  EXPECT_EQ(c.eta, 65536U * 2 * 16);
  EXPECT_EQ(c.tau, 256U);
  EXPECT_EQ(c.repetitions, 4U);
  EXPECT_EQ(c.copies_per_center(), 512U);
  const auto r = GoodCentersConfig::paper(1, 0.3, 2.0);
  EXPECT_EQ(r.tau, 427U);  // ceil(426.67)
  EXPECT_EQ(r.copies_per_center(), 427U);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.tau = 3;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.copies = 1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(GoodCentersConfig, Validation) {
  EXPECT_THROW(GoodCentersConfig::desk(0, 0.5, 1, 1, 1, 1).validate(), InvalidArgument);
  EXPECT_THROW(GoodCentersConfig::desk(1, 0.6, 1, 1, 1, 1).validate(), InvalidArgument);
  EXPECT_THROW(GoodCentersConfig::desk(1, 0.0, 1, 1, 1, 1).validate(), InvalidArgument);
  EXPECT_THROW(GoodCentersConfig::desk(1, 0.5, 0, 1, 1, 1).validate(), InvalidArgument);
  EXPECT_THROW(GoodCentersConfig::desk(1, 0.5, 1, 1, 1, 0).validate(), InvalidArgument);
  auto a = GoodCentersConfig::desk(1, 0.5, 1, 1, 1, 1);
  a.alpha = 0.5;
  EXPECT_THROW(a.validate(), InvalidArgument);
}

TEST(ListSizeBound, Examples) {
  auto cfg = exhaustive(2, 1, 1, 3, 0);
  EXPECT_EQ(list_size_bound(cfg, 4), 36U);  // reps * 4 * 3
  cfg = exhaustive(1, 1, 3, 2, 0);
  EXPECT_EQ(list_size_bound(cfg, 7), 70U);  // reps * C(7,3)
  cfg = exhaustive(3, 1, 2, 1, 0);
  EXPECT_EQ(list_size_bound(cfg, 5), 0U);
  EXPECT_EQ(list_size_bound(GoodCentersConfig::desk(2, 0.5, 5, 2, 7, 11), 100), 77U);
  EXPECT_FALSE(list_size_bound(GoodCentersConfig::paper(2, 0.5, 1.0), 200000).has_value());
  EXPECT_FALSE(list_size_bound_for_seeds(GoodCentersConfig::paper(1, 0.5, 1.0), 3).has_value());
}

TEST(ListSizeBound, MatchesEnumeration) {
  for (std::size_t m = 1; m <= 7; ++m)
    for (std::size_t t = 1; t <= 3; ++t)
      for (std::size_t tau = 1; tau <= 3; ++tau) {
        if (t * tau > 6) continue;
        std::size_t count = 0;
        if (t * tau <= m) detail::enumerate_disjoint_tuples(m, t, tau, [&](std::span<const std::size_t>) { ++count; });
        EXPECT_EQ(list_size_bound(exhaustive(t, 1, tau, 1, 0), m), count) << m << " " << t << " " << tau;
        EXPECT_EQ(count, brute_tuples(m, t, tau).size());
      }
}

TEST(GoodCenters, SingletonsIncludeSeeds) {
  Rng gen(1);
  const auto x = test::random_points(gen, 12, 2);
  const CenterSet seeds{{x[0], x[5], x[9]}};
  Rng rng(3);
  const auto list = good_centers(x, seeds, exhaustive(1, 2, 1, 1, 1), rng);
  EXPECT_EQ(list.size(), 5U);
  for (const auto& c : seeds.centers) {
    bool found = false;
    for (const auto& e : list.entries) found |= e.size() == 1 && e[0] == c;
    EXPECT_TRUE(found);
  }
  for (const auto& e : list.entries) EXPECT_EQ(e.size(), 1U);
}

TEST(GoodCenters, TwoPointMultisetOrderedPairs) {
  // M = {a, b} with no seed copies: the two ordered pairs.
  const PointList x{{0, 0}, {4, 0}};
  const CenterSet seeds{{{0, 0}}};
  Rng rng(2);
  auto cfg = exhaustive(2, 1, 1, 1, 0);
  const auto list = good_centers(x, seeds, cfg, rng);
  ASSERT_EQ(list.size(), 2U);
  // Both samples are the point with positive mass.
  EXPECT_EQ(list.repetitions[0].sample_indices, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(list.provenance[0].positions, (Tuple{0, 1}));
  EXPECT_EQ(list.provenance[1].positions, (Tuple{1, 0}));

  // With one seed copy, M = {s0, s1, c}: 6 ordered pairs.
  cfg.copies = 1;
  Rng rng2(2);
  const auto with_copy = good_centers(x, seeds, cfg, rng2);
  EXPECT_EQ(with_copy.size(), 6U);
  std::multiset<Tuple> got;
  for (const auto& p : with_copy.provenance) got.insert(p.positions);
  EXPECT_EQ(got, brute_tuples(3, 2, 1));
}

TEST(GoodCenters, ExhaustiveMatchesTupleOracle) {
  Rng gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = test::random_points(gen, 8, 2);
    const CenterSet seeds{{x[0], x[1]}};
    const std::size_t t = 1 + gen.uniform_index(2), tau = 1 + gen.uniform_index(2);
    const std::size_t eta = 2 + gen.uniform_index(2), copies = gen.uniform_index(3);
    const auto cfg = exhaustive(t, eta, tau, 2, copies);
    const std::size_t m = eta * t + 2 * copies;
    if (m > 10) continue;
    Rng rng(static_cast<std::uint64_t>(trial));
    const auto list = good_centers(x, seeds, cfg, rng);
    const auto oracle = brute_tuples(m, t, tau);
    for (std::size_t rep = 0; rep < 2; ++rep) {
      std::multiset<Tuple> got;
      for (const auto& p : list.provenance)
        if (p.repetition == rep) got.insert(p.positions);
      EXPECT_EQ(got, oracle);
    }
    EXPECT_EQ(list.size(), *list_size_bound_for_seeds(cfg, 2));
  }
}

TEST(GoodCenters, EntriesAreCentroidsOfProvenance) {
  Rng gen(4);
  const auto x = test::random_points(gen, 30, 3);
  Rng srng(1);
  const auto seeds = d2_seed(x, 3, 0, srng).centers;
  auto cfg = GoodCentersConfig::desk(3, 0.5, 6, 3, 3, 10);
  cfg.copies = 2;
  Rng rng(8);
  const auto list = good_centers(x, seeds, cfg, rng);
  ASSERT_EQ(list.size(), 30U);
  for (std::size_t e = 0; e < list.size(); ++e) {
    const auto& entry = list.entries[e];
    const auto& prov = list.provenance[e];
    ASSERT_EQ(entry.size(), 3U);
    ASSERT_EQ(prov.positions.size(), 9U);
    EXPECT_EQ(std::set<std::size_t>(prov.positions.begin(), prov.positions.end()).size(), 9U);
    const auto& info = list.repetitions[prov.repetition];
    for (std::size_t s = 0; s < 3; ++s) {
      std::vector<double> mu(3, 0.0);
      for (std::size_t q = 0; q < 3; ++q) {
        const std::size_t pos = prov.positions[s * 3 + q];
        ASSERT_LT(pos, info.multiset_size);
        const Point& p = pos < info.sample_indices.size() ? x[info.sample_indices[pos]]
                                                          : seeds[(pos - info.sample_indices.size()) / info.copies_per_center];
        for (std::size_t j = 0; j < 3; ++j) mu[j] += p[j] / 3.0;
      }
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(entry[s][j], mu[j], 1e-12);
    }
  }
}

TEST(GoodCenters, InfeasibleRepetitionFlagged) {
  const PointList x{{0, 0}, {1, 0}};
  Rng rng(1);
  auto cfg = GoodCentersConfig::desk(2, 0.5, 1, 3, 2, 4);
  cfg.copies = 0;
  const auto list = good_centers(x, CenterSet{{{0, 0}}}, cfg, rng);
  EXPECT_TRUE(list.empty());
  ASSERT_EQ(list.repetitions.size(), 2U);
  EXPECT_TRUE(list.repetitions[0].infeasible);
}

TEST(GoodCenters, Errors) {
  const PointList x{{0, 0}};
  Rng rng(1);
  const auto cfg = GoodCentersConfig::desk(1, 0.5, 1, 1, 1, 1);
  EXPECT_THROW(good_centers(x, CenterSet{}, cfg, rng), EmptyInput);
  EXPECT_THROW(good_centers(PointList{}, CenterSet{{{0, 0}}}, cfg, rng), EmptyInput);
  EXPECT_THROW(good_centers(x, CenterSet{{{0, 0}}}, GoodCentersConfig::paper(1, 0.5, 1.0), rng), InvalidArgument);
  auto big = exhaustive(2, 10, 2, 1, 0);
  big.max_list_size = 100;
  EXPECT_THROW(good_centers(x, CenterSet{{{0, 0}}}, big, rng), InvalidArgument);
}

TEST(GoodCenters, BudgetPrefixMonotone) {
  Rng gen(5);
  const auto x = test::random_points(gen, 25, 2);
  const CenterSet seeds{{x[0], x[1]}};
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng a(s), b(s);
    const auto small = good_centers(x, seeds, GoodCentersConfig::desk(2, 0.5, 5, 2, 3, 4), a);
    const auto large = good_centers(x, seeds, GoodCentersConfig::desk(2, 0.5, 5, 2, 3, 9), b);
    for (std::size_t e = 0; e < small.size(); ++e) {
      const std::size_t rep = e / 4, idx = e % 4;
      EXPECT_EQ(small.entries[e], large.entries[rep * 9 + idx]);
      EXPECT_EQ(small.provenance[e].positions, large.provenance[rep * 9 + idx].positions);
    }
  }
}

TEST(GoodCenters, DeterministicAcrossWorkers) {
  Rng gen(6);
  const auto x = test::random_points(gen, 40, 2);
  const CenterSet seeds{{x[0], x[1], x[2]}};
  const auto cfg = GoodCentersConfig::desk(2, 0.5, 6, 2, 5, 8);
  Rng a(9), b(9);
  const auto one = good_centers(x, seeds, cfg, a, 1);
  const auto four = good_centers(x, seeds, cfg, b, 4);
  EXPECT_EQ(one.entries, four.entries);
}

TEST(GoodCenters, TwoDuplicateGroupsReachZero) {
  std::size_t hits = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = duplicate_groups(2, 20, 2);
    Rng rng(s);
    const auto seeds = d2_seed(inst.data.points, 2, 0, rng).centers;
    const auto list = good_centers(inst.data.points, seeds, GoodCentersConfig::desk(2, 0.5, 40, 4, 5, 64), rng);
    const auto parts = gather_parts(inst.data.points, inst.planted);
    hits += best_psi(list, parts).cost == 0.0;
  }
  EXPECT_GE(hits, 15U);
}

TEST(BestPsi, PicksMinimum) {
  CandidateList list;
  list.entries = {CenterSet{{{5, 5}}}, CenterSet{{{0, 0}}}, CenterSet{{{1, 0}}}};
  const std::vector<PointList> parts{{{0, 0}, {0, 0}}};
  const auto b = best_psi(list, parts);
  EXPECT_EQ(b.index, 1U);
  EXPECT_EQ(b.cost, 0.0);
}

#include <gtest/gtest.h>

#include <cmath>

#include "ckm/generators.hpp"
#include "ckm/oracle.hpp"
#include "ckm/stability.hpp"
#include "support.hpp"

using namespace ckm;

TEST(GapInstance, Construction) {
  const auto g = gen_gap_instance(4, 0.1);
  ASSERT_EQ(g.data.size(), 4U);
  EXPECT_EQ(g.data.dim(), 5U);
  EXPECT_EQ(g.data.points[0], (Point{1, 0, 0, 0, 0.1}));
  EXPECT_EQ(g.data.points[3], (Point{0, 0, 0, 1, -0.1}));
  EXPECT_EQ(g.optimal, (Clustering{{0, 1}, {2, 3}}));
  EXPECT_THROW(gen_gap_instance(5, 0.1), InvalidArgument);
  EXPECT_THROW(gen_gap_instance(2, 0.1), InvalidArgument);
  EXPECT_THROW(gen_gap_instance(4, 0.0), InvalidArgument);
}

TEST(GapInstance, OracleOptimumAndMergedCost) {
  for (std::size_t n : {4, 6, 8, 10}) {
    const auto g = gen_gap_instance(n, 0.1);
    const auto oracle = opt_kmeans(g.data.points, 2);
    EXPECT_NEAR(oracle.cost, static_cast<double>(n) - 2.0, 1e-12 * n);
    EXPECT_DOUBLE_EQ(g.opt2, static_cast<double>(n) - 2.0);
    EXPECT_NEAR(delta_cost(gather_parts(g.data.points, g.optimal)[0]) + delta_cost(gather_parts(g.data.points, g.optimal)[1]),
                oracle.cost, 1e-12 * n);
    const double merged = reassignment_cost(g.data.points, g.optimal, 0, 1);
    EXPECT_NEAR(merged, static_cast<double>(n) * 1.02, 1e-12 * n);
    EXPECT_NEAR(g.merged_cost, merged, 1e-12 * n);
  }
}

TEST(GapInstance, StabilityProfile) {
  const auto g = gen_gap_instance(8, 0.1);
  EXPECT_TRUE(check_beta_distributed(g.data.points, g.optimal, 0.5).pass);
  EXPECT_FALSE(check_weak_deletion(g.data.points, g.optimal, 0.5).pass);
  EXPECT_TRUE(check_weak_deletion(g.data.points, g.optimal, 0.3).pass);
  const auto r = stability_report(g.data.points, g.optimal, 0.5);
  EXPECT_NEAR(r.weak_deletion_gamma, 8.16 / 6.0 - 1.0, 1e-12);
  EXPECT_TRUE(r.witnesses.empty());
}

TEST(Stability, CoincidentClustersFail) {
  const PointList x{{-1, 0}, {1, 0}, {0, 0}};
  const Clustering parts{{0, 1}, {2}};
  for (double b : {1e-9, 0.1, 1.0}) EXPECT_FALSE(check_beta_distributed(x, parts, b).pass);
  for (double g : {1e-9, 0.1, 1.0}) EXPECT_FALSE(check_weak_deletion(x, parts, g).pass);
  const auto r = check_beta_distributed(x, parts, 0.5);
  ASSERT_FALSE(r.witnesses.empty());
  EXPECT_EQ(r.witnesses[0].i, 0U);
  EXPECT_EQ(r.witnesses[0].x, 2U);
}

TEST(Stability, Errors) {
  const PointList x{{0, 0}, {1, 0}};
  EXPECT_THROW(check_weak_deletion(x, Clustering{{0, 1}}, 0.1), InvalidArgument);
  EXPECT_THROW(check_irreducible(x, 1, 0.1), InvalidArgument);
  EXPECT_THROW(check_beta_distributed(x, Clustering{{0, 1}, {}}, 0.1), EmptyInput);
  EXPECT_THROW(check_beta_distributed(x, Clustering{{0}}, 0.1), InvalidArgument);
  EXPECT_THROW(check_beta_distributed(x, Clustering{{0, 1}, {1}}, 0.1), InvalidArgument);
  PointList big(11, Point{0, 0});
  EXPECT_THROW(check_irreducible(big, 2, 0.1), OracleLimitExceeded);
}

TEST(Stability, ZeroOptPassesVacuously) {
  const auto inst = duplicate_groups(3, 2, 2);
  EXPECT_TRUE(check_weak_deletion(inst.data.points, inst.planted, 100.0).pass);
  EXPECT_TRUE(check_irreducible(inst.data.points, 3, 100.0).pass);
  const auto r = stability_report(inst.data.points, inst.planted, std::nullopt, 3);
  EXPECT_TRUE(std::isinf(r.beta_distributed_max));
  EXPECT_TRUE(std::isinf(r.weak_deletion_gamma));
  EXPECT_TRUE(std::isinf(*r.irreducible_gamma));
}

TEST(Stability, ReportedMaximaAreTight) {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 4 + rng.uniform_index(5), k = 2 + rng.uniform_index(2);
    const auto x = test::random_points(rng, n, 2);
    const auto parts = opt_kmeans(x, k).clustering;
    bool empty = false;
    for (const auto& p : parts) empty |= p.empty();
    if (empty) continue;
    const auto r = stability_report(x, parts, std::nullopt, k);
    EXPECT_TRUE(check_beta_distributed(x, parts, r.beta_distributed_max).pass);
    EXPECT_FALSE(check_beta_distributed(x, parts, 1.01 * r.beta_distributed_max).pass);
    EXPECT_TRUE(check_weak_deletion(x, parts, r.weak_deletion_gamma).pass);
    EXPECT_FALSE(check_weak_deletion(x, parts, 1.01 * r.weak_deletion_gamma).pass);
    const auto irr = check_irreducible(x, k, 0.0);
    EXPECT_GE(irr.opt_k_minus_1, (1.0 + *r.irreducible_gamma) * irr.opt_k);
    EXPECT_LT(irr.opt_k_minus_1, (1.0 + 1.01 * *r.irreducible_gamma) * irr.opt_k);
  }
}

TEST(Stability, ReassignmentMatchesExplicit) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const auto x = test::random_points(rng, 7, 3);
    const Clustering parts{{0, 1, 2}, {3, 4, 5, 6}};
    const auto p = gather_parts(x, parts);
    const Point mu0 = centroid(p[0]), mu1 = centroid(p[1]);
    double explicit_cost = 0.0;
    for (const auto& q : p[0]) explicit_cost += squared_dist(q, mu1);
    for (const auto& q : p[1]) explicit_cost += squared_dist(q, mu1);
    EXPECT_NEAR(reassignment_cost(x, parts, 0, 1), explicit_cost, 1e-9 * explicit_cost);
    (void)mu0;
  }
}

TEST(Stability, IrreducibleExamples) {
  // Uniform-ish points: OPT_1 is not much bigger than OPT_2.
  const PointList line{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}};
  EXPECT_FALSE(check_irreducible(line, 2, 10.0).pass);
  EXPECT_TRUE(check_irreducible(line, 2, 1.0).pass);
}

TEST(Stability, ImplicationChain) {
  Rng rng(3);
  std::size_t counterexamples = 0, irreducible_hits = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + rng.uniform_index(4), k = 2 + rng.uniform_index(2);
    PointList x;
    if (t % 2) {
      x = test::random_points(rng, n, 2);
    } else {
      const auto inst = planted_gaussian(n, k, 2, 0.5 + rng.uniform01(), 4.0, rng);
      x = inst.data.points;
    }
    const auto oracle = opt_kmeans(x, k);
    bool empty = false;
    for (const auto& p : oracle.clustering) empty |= p.empty();
    if (empty) continue;
    for (double gamma : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      if (!check_irreducible(x, k, gamma).pass) continue;
      ++irreducible_hits;
      const bool weak = check_weak_deletion(x, oracle.clustering, gamma).pass;
      const bool dist = check_beta_distributed(x, oracle.clustering, gamma / 4.0).pass;
      counterexamples += !weak || !dist;
    }
  }
  EXPECT_EQ(counterexamples, 0U);
  EXPECT_GT(irreducible_hits, 50U);
}

TEST(CheapExpensive, SplitAndBound) {
  const PointList x{{0, 0}, {0, 0}, {10, 0}, {12, 0}};
  const Clustering parts{{0, 1}, {2, 3}};
  const auto s = split_cheap_expensive(x, parts, 1.0, 0.5);
  EXPECT_EQ(s.cheap, std::vector<std::size_t>{0});
  EXPECT_EQ(s.expensive, std::vector<std::size_t>{1});
  EXPECT_EQ(s.t, 1U);
  EXPECT_DOUBLE_EQ(s.threshold, 0.5 * 2.0 / 4096.0);
  EXPECT_EQ(expensive_cluster_bound(1.0, 0.5), 8192.0);
  EXPECT_EQ(default_expensive_count(1.0, 0.5, 5), 5U);
  EXPECT_EQ(default_expensive_count(4096.0, 1.0, 5), 1U);
  EXPECT_THROW(split_cheap_expensive(x, parts, 0.0, 0.5), InvalidArgument);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto y = test::random_points(rng, 30, 2);
    Clustering p(6);
    for (std::size_t i = 0; i < 30; ++i) p[i % 6].push_back(i);
    EXPECT_LE(static_cast<double>(split_cheap_expensive(y, p, 0.01, 0.1).t), expensive_cluster_bound(0.01, 0.1));
  }
}

TEST(FasterPtas, AllCheapUsesSolverAlone) {
  Rng gen(5);
  const auto inst = planted_gaussian(9, 2, 2, 0.3, 10.0, gen);
  Rng rng(1);
  FasterPtasOptions opt;
  opt.t = 0;
  opt.opt_star = *inst.certified_opt;
  const auto r = faster_ptas(inst.data.points, 2, 0.5, 1.0, brute_force_cheap_solver(), rng, opt);
  EXPECT_EQ(r.attempts, 1U);
  EXPECT_EQ(r.list_size, 0U);
  ASSERT_TRUE(r.centers.has_value());
  EXPECT_NEAR(r.cost, *inst.certified_opt, 1e-9);
  EXPECT_TRUE(r.certified);
}

TEST(FasterPtas, PlantedInstancesCertify) {
  std::size_t good = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng gen(300 + s);
    const auto inst = planted_gaussian(36, 3, 2, 0.4, 10.0, gen);
    ASSERT_TRUE(inst.certified_opt.has_value());
    Rng rng(s);
    FasterPtasOptions opt;
    opt.t = 3;
    opt.list = GoodCentersConfig::desk(3, 0.5, 3, 2, 2, 1);
    opt.list.copies = 2;
    opt.list.exhaustive = true;
    opt.oversample = 3;
    opt.opt_star = *inst.certified_opt;
    const auto r = faster_ptas(inst.data.points, 3, 0.5, 1.0, brute_force_cheap_solver(), rng, opt);
    ASSERT_TRUE(r.centers.has_value());
    EXPECT_EQ(r.t, 3U);
    good += r.cost <= 1.5 * *inst.certified_opt;
    EXPECT_EQ(r.certified, r.cost <= 1.5 * *inst.certified_opt);
  }
  EXPECT_GE(good, 15U);
}

TEST(FasterPtas, PartialExpensiveCompletion) {
  Rng gen(6);
  const auto inst = planted_gaussian(10, 3, 2, 0.3, 10.0, gen);
  Rng rng(2);
  FasterPtasOptions opt;
  opt.t = 1;
  opt.list = GoodCentersConfig::desk(1, 0.5, 6, 2, 2, 4);
  const auto r = faster_ptas(inst.data.points, 3, 0.5, 1.0, brute_force_cheap_solver(), rng, opt);
  ASSERT_TRUE(r.centers.has_value());
  EXPECT_EQ(r.attempts, 8U);
  EXPECT_FALSE(r.certified);
  EXPECT_EQ(r.centers->size(), 3U);
}

TEST(FasterPtas, FailuresAndErrors) {
  const PointList x{{0, 0}, {1, 1}};
  Rng rng(1);
  CheapSolver never = [](std::span<const Point>, std::size_t, double, const CenterSet&) -> std::optional<CenterSet> {
    return std::nullopt;
  };
  FasterPtasOptions opt;
  opt.list = GoodCentersConfig::desk(1, 0.5, 2, 1, 2, 3);
  const auto r = faster_ptas(x, 2, 0.5, 1.0, never, rng, opt);
  EXPECT_FALSE(r.centers.has_value());
  EXPECT_EQ(r.attempts, 6U);
  EXPECT_THROW(faster_ptas(PointList{}, 2, 0.5, 1.0, never, rng), EmptyInput);
  EXPECT_THROW(faster_ptas(x, 0, 0.5, 1.0, never, rng), InvalidArgument);
  EXPECT_THROW(faster_ptas(x, 2, 0.5, 1.0, CheapSolver{}, rng), InvalidArgument);
  opt.list = GoodCentersConfig::desk(1, 0.5, 1, 5, 1, 1);
  opt.list.copies = 0;
  EXPECT_THROW(faster_ptas(x, 2, 0.5, 1.0, never, rng, opt), EmptyInput);
}

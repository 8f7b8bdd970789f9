#include <gtest/gtest.h>

#include <salmatch/search.hpp>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace salmatch;
using salmatch::testing::two_by_two;
using salmatch::testing::two_sm;

TEST(LbInit, Examples) {
  const Instance t = two_sm();
  const auto [mu, r] = lb_init(t, t.salience, 2, Norm::linf);
  EXPECT_EQ(mu, Matching::from_a({1, 0}));
  EXPECT_NEAR(r, 0.1, 1e-9);
  const Instance a = two_by_two();
  const auto [mu_a, r_a] = lb_init(a, a.salience, 2, Norm::linf);
  EXPECT_EQ(mu_a, Matching::from_a({0, 1}));
  EXPECT_NEAR(r_a, 0.2, 1e-9);
}

TEST(Search, TwoSmCertifiesAOptimal) {
  const Instance t = two_sm();
  SearchOptions opt;
  opt.budget = 10;
  const auto st = most_robust_anytime(t, t.salience, 2, Norm::linf, opt);
  EXPECT_TRUE(st.certified);
  EXPECT_EQ(st.best, Matching::from_a({0, 1}));
  EXPECT_TRUE(is_unbounded(st.lb));
}

TEST(Search, SmallCertifiesForAnyBudget) {
  const Instance a = two_by_two();
  for (long budget : {0L, 1L, 5L, -1L}) {
    SearchOptions opt;
    opt.budget = budget;
    const auto st = most_robust_anytime(a, a.salience, 2, Norm::linf, opt);
    EXPECT_TRUE(st.certified);
    EXPECT_EQ(st.best, Matching::from_a({0, 1}));
    EXPECT_NEAR(st.lb, 0.2, 1e-9);
  }
}

TEST(Search, ZeroBudgetKeepsRoot) {
  const Instance t = two_sm();
  SearchOptions opt;
  opt.budget = 0;
  const auto st = most_robust_anytime(t, t.salience, 2, Norm::linf, opt);
  EXPECT_FALSE(st.certified);
  ASSERT_EQ(st.frontier.size(), 1u);
  EXPECT_EQ(st.frontier[0].downset.count(), 0u);
  EXPECT_EQ(st.best, Matching::from_a({1, 0}));
  EXPECT_NEAR(st.lb, 0.1, 1e-9);
  EXPECT_EQ(st.expansions, 0);
}

TEST(Search, RandomSandwichPruningAndArgmax) {
  std::mt19937_64 rng(808);
  int with_rotations = 0;
  for (int t = 0; t < 150; ++t) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 2 + static_cast<int>(rng() % 2);
    Instance inst = salmatch::testing::random_instance(n, m, rng);
    const int k = 1 + static_cast<int>(rng() % m);
    const Norm p = static_cast<Norm>(rng() % 3);
    const auto poset = build_rotation_poset(inst, inst.salience);
    if (poset.size() > 0) ++with_rotations;

    double best = -kUnbounded;
    Matching argmax;
    for (const auto& mu : enumerate_stable(poset)) {
      const double r = robustness_radius(inst, inst.salience, mu, k, p).radius;
      if (r > best + 1e-12 || (r == best)) {
        if (!(r == best) || mu < argmax) argmax = mu;
        best = std::max(best, r);
      }
    }

    SearchOptions opt;
    opt.eps_ub = 1e-4;
    const auto st = most_robust_anytime(inst, inst.salience, k, p, opt);
    EXPECT_TRUE(st.certified);
    EXPECT_TRUE(is_stable(inst, inst.salience, st.best));
    const double r_best = robustness_radius(inst, inst.salience, st.best, k, p).radius;
    EXPECT_TRUE(r_best == st.lb || std::abs(r_best - st.lb) <= 1e-12);
    if (is_unbounded(best)) {
      EXPECT_TRUE(is_unbounded(st.lb));
    } else {
      EXPECT_GE(st.lb, best - 1e-4) << "trial " << t;
    }
    double prev_lb = -kUnbounded, prev_ub = kUnbounded;
    for (const auto& ev : st.trace) {
      EXPECT_LE(ev.lb, best + 1e-12);
      EXPECT_LE(best, ev.ub_frontier + 1e-4);
      EXPECT_GE(ev.lb, prev_lb);
      EXPECT_LE(ev.ub_frontier, prev_ub + 1e-12);
      prev_lb = ev.lb;
      prev_ub = ev.ub_frontier;
    }

    for (const auto& ev : st.trace) {
      if (ev.event != "prune") continue;
      double sub_best = -kUnbounded;
      for_each_downset(poset, [&](const DownSet& e) {
        for (std::size_t i = 0; i < ev.node.size(); ++i) {
          if (ev.node[i] == '1' && !e.contains(static_cast<int>(i))) return;
        }
        sub_best = std::max(sub_best, robustness_radius(inst, inst.salience, matching_from_downset(poset, e), k, p).radius);
      });
      EXPECT_LE(sub_best, ev.lb + 1e-4) << "trial " << t;
    }

    opt.exhaustive = true;
    const auto ex = most_robust_anytime(inst, inst.salience, k, p, opt);
    EXPECT_EQ(ex.best, argmax) << "trial " << t;
  }
  EXPECT_GT(with_rotations, 10);
}

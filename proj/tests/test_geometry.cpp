#include <gtest/gtest.h>

#include <salmatch/geometry.hpp>

#include <random>

#include "fixtures.hpp"

using namespace salmatch;
using salmatch::testing::two_by_two;
using salmatch::testing::random_instance;
using salmatch::testing::two_sm;

namespace {

Matching mu_b_of(const Instance& inst) { return deferred_acceptance(inst, inst.salience, Side::B); }
Matching mu_a_of(const Instance& inst) { return deferred_acceptance(inst, inst.salience, Side::A); }

RegionFactor random_factor(int m, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RegionFactor f;
  f.b = 0;
  f.m = m;
  for (int j = 0; j < h; ++j) {
    Vec g(m);
    for (double& x : g) x = unif(rng) - unif(rng);
    f.blockers.push_back(j);
    f.normals.push_back(g);
  }
  return f;
}

// Clips the 2-simplex, in (s1, s2) coordinates, by each halfspace and returns
// the relative area.
double clipped_area_m3(const RegionFactor& f) {
  using P = std::array<double, 2>;
  std::vector<P> poly{{0, 0}, {1, 0}, {0, 1}};
  for (const auto& g : f.normals) {
    auto val = [&](const P& p) { return g[0] * p[0] + g[1] * p[1] + g[2] * (1 - p[0] - p[1]); };
    std::vector<P> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const P& p = poly[i];
      const P& q = poly[(i + 1) % poly.size()];
      const double vp = val(p), vq = val(q);
      if (vp >= 0) next.push_back(p);
      if ((vp >= 0) != (vq >= 0)) {
        const double t = vp / (vp - vq);
        next.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
    poly = next;
    if (poly.empty()) return 0.0;
  }
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const P& p = poly[i];
    const P& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - p[1] * q[0];
  }
  return std::abs(a);  // area / (1/2)
}

double rejection_volume(const RegionFactor& f, int samples, std::mt19937_64& rng) {
  int hit = 0;
  for (int t = 0; t < samples; ++t) hit += f.contains(detail::sample_simplex(f.m, rng), 0.0);
  return static_cast<double>(hit) / samples;
}

}  // namespace

TEST(Region, Examples) {
  const auto ts = two_sm();
  const auto ra = region(ts, mu_a_of(ts));
  EXPECT_TRUE(ra.factors[0].normals.empty());
  EXPECT_TRUE(ra.factors[1].normals.empty());

  const auto rb = region(ts, mu_b_of(ts));
  ASSERT_EQ(rb.factors[0].normals.size(), 1u);
  ASSERT_EQ(rb.factors[1].normals.size(), 1u);
  // b1: s2 >= s1, b2: s1 >= s2
  EXPECT_TRUE(rb.factors[0].contains(Vec{0.3, 0.7}));
  EXPECT_FALSE(rb.factors[0].contains(Vec{0.7, 0.3}));
  EXPECT_TRUE(rb.factors[1].contains(Vec{0.7, 0.3}));
  EXPECT_FALSE(rb.factors[1].contains(Vec{0.3, 0.7}));

  const auto aa = two_by_two();
  const auto r = region(aa, salmatch::testing::identity_matching(2));
  ASSERT_EQ(r.factors[0].normals.size(), 1u);
  EXPECT_TRUE(r.factors[1].normals.empty());
  EXPECT_TRUE(r.factors[0].contains(Vec{0.6, 0.4}));
  EXPECT_FALSE(r.factors[0].contains(Vec{0.4, 0.6}));
}

TEST(Region, HalfspaceCountBound) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto inst = random_instance(6, 3, rng);
    const auto reg = region(inst, mu_b_of(inst));
    for (const auto& f : reg.factors) EXPECT_LE(static_cast<int>(f.normals.size()), inst.n() - 1);
  }
}

TEST(Contains, SmallMarket) {
  const auto inst = two_by_two();
  const auto mu = salmatch::testing::identity_matching(2);
  const auto reg = region(inst, mu);
  EXPECT_TRUE(contains(reg, inst.salience));

  auto S = with_row(inst.salience, 0, SalienceVector::make({0.45, 0.55}));
  EXPECT_FALSE(contains(reg, S));
  EXPECT_FALSE(is_stable(inst, S, mu));

  // boundary: closed region contains it; stability rests on the tie-break
  S = with_row(inst.salience, 0, SalienceVector::make({0.5, 0.5}));
  EXPECT_TRUE(contains(reg, S));
  EXPECT_TRUE(is_stable(inst, S, mu));  // a1 precedes a2
  auto flipped = inst;
  flipped.tie_break = {1, 0};
  EXPECT_FALSE(is_stable(flipped, S, mu));
  EXPECT_TRUE(contains(region(flipped, mu), S));
}

TEST(Contains, FactorizationAndStability) {
  std::mt19937_64 rng(11);
  const auto inst = random_instance(4, 3, rng);
  const auto mu = mu_b_of(inst);
  const auto reg = region(inst, mu);
  for (int t = 0; t < 10000; ++t) {
    SalienceProfile S;
    for (int b = 0; b < inst.n(); ++b) S.push_back(SalienceVector::make(detail::sample_simplex(inst.m, rng)));
    bool all = true;
    for (int b = 0; b < inst.n(); ++b) all = all && reg.factors[b].contains(S[b].values());
    ASSERT_EQ(contains(reg, S), all);
    // generic profiles have no score ties
    ASSERT_EQ(contains(reg, S), is_stable(inst, S, mu));
  }
}

TEST(Vertices, Examples) {
  const auto ts = two_sm();
  const auto rb = region(ts, mu_b_of(ts));
  const auto v = vertices(rb.factors[0]);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0][0], 0.0, 1e-12);
  EXPECT_NEAR(v[0][1], 1.0, 1e-12);
  EXPECT_NEAR(v[1][0], 0.5, 1e-12);
  EXPECT_NEAR(v[1][1], 0.5, 1e-12);

  RegionFactor full;
  full.m = 3;
  const auto u = vertices(full);
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[0], (Vec{0, 0, 1}));
  EXPECT_EQ(u[1], (Vec{0, 1, 0}));
  EXPECT_EQ(u[2], (Vec{1, 0, 0}));

  RegionFactor empty;
  empty.m = 3;
  empty.normals = {{-1, -1, -1}};
  EXPECT_TRUE(vertices(empty).empty());
  EXPECT_EQ(volume_exact(empty), 0.0);
}

TEST(Vertices, Guards) {
  RegionFactor f;
  f.m = 7;
  EXPECT_THROW(vertices(f), Error);
  try {
    vertices(f);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported);
  }
  f.m = 5;
  f.normals = {{1, 0, 0, 0, -1}};
  EXPECT_NO_THROW(vertices(f));
  EXPECT_THROW(volume_exact(f), Error);
}

TEST(Vertices, SatisfyConstraintsRandom) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int m = 2 + t % 5;
    const auto f = random_factor(m, 1 + t % 4, rng);
    for (const auto& v : vertices(f)) {
      EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0), 1.0, 1e-9);
      EXPECT_TRUE(f.contains(v, 1e-9));
      // a vertex has at least m-1 tight constraints
      int tight = 0;
      for (const auto& g : detail::all_constraints(f)) tight += std::abs(dot(v, g)) <= 1e-9;
      EXPECT_GE(tight, m - 1);
    }
  }
}

TEST(VolumeExact, Examples) {
  const auto aa = two_by_two();
  EXPECT_NEAR(volume_exact(region(aa, salmatch::testing::identity_matching(2))), 0.5, 1e-12);
  const auto ts = two_sm();
  EXPECT_NEAR(volume_exact(region(ts, mu_b_of(ts))), 0.25, 1e-12);
  EXPECT_EQ(volume_exact(region(ts, mu_a_of(ts))), 1.0);
  RegionFactor full;
  full.m = 4;
  full.normals = {{1, 1, 1, 1}};  // redundant
  EXPECT_NEAR(volume_exact(full), 1.0, 1e-12);
}

TEST(VolumeExact, MatchesPolygonClipping) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 300; ++t) {
    const auto f = random_factor(3, 1 + t % 6, rng);
    EXPECT_NEAR(volume_exact(f), clipped_area_m3(f), 1e-9);
  }
}

TEST(VolumeExact, MatchesRejectionInFourDims) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_factor(4, 1 + t % 4, rng);
    const double est = rejection_volume(f, 200000, rng);
    EXPECT_NEAR(volume_exact(f), est, 0.006) << t;
  }
}

TEST(VolumeExact, Monotone) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + t % 3;
    auto f = random_factor(m, 6, rng);
    RegionFactor g;
    g.m = m;
    double prev = volume_exact(g);
    EXPECT_EQ(prev, 1.0);
    for (const auto& n : f.normals) {
      g.normals.push_back(n);
      const double v = volume_exact(g);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(VolumeMc, SmallMarket) {
  const auto aa = two_by_two();
  const auto mc = volume_mc(region(aa, salmatch::testing::identity_matching(2)), 100000, 42);
  EXPECT_NEAR(mc.estimate, 0.5, 0.01);
  EXPECT_LE(mc.half_width, 0.01);
  EXPECT_FALSE(mc.degenerate);
  EXPECT_EQ(mc.seed, 42u);
}

TEST(VolumeMc, ShortCircuitAndGuards) {
  const auto ts = two_sm();
  const auto mc = volume_mc(region(ts, mu_a_of(ts)), 1000, 1);
  EXPECT_EQ(mc.estimate, 1.0);
  EXPECT_EQ(mc.half_width, 0.0);
  EXPECT_THROW(volume_mc(region(ts, mu_a_of(ts)), 999, 1), Error);

  Region r;
  r.m = 3;
  RegionFactor empty;
  empty.m = 3;
  empty.normals = {{1, -1, 0}, {-1, 1, 0}, {0, 1, -1}};  // a segment: no relative interior
  r.factors.push_back(empty);
  const auto d = volume_mc(r, 1000, 1);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.estimate, 0.0);
}

TEST(VolumeMc, HitAndRunWithinTwoPercent) {
  std::mt19937_64 rng(17);
  int checked = 0;
  while (checked < 6) {
    Region r;
    r.m = 3;
    r.factors.push_back(random_factor(3, 4, rng));
    const double exact = volume_exact(r);
    if (exact < 0.05) continue;
    const auto mc = volume_mc(r, 200000, 1000 + checked);
    EXPECT_TRUE(mc.factors[0].hit_and_run);
    EXPECT_NEAR(mc.estimate, exact, 0.02 * exact) << "exact " << exact;
    ++checked;
  }
}

TEST(VolumeMc, DeterministicAcrossWorkers) {
  std::mt19937_64 rng(19);
  const auto inst = random_instance(5, 3, rng);
  const auto reg = region(inst, mu_b_of(inst));
  const auto x = volume_mc(reg, 5000, 7, 1);
  const auto y = volume_mc(reg, 5000, 7, 4);
  EXPECT_EQ(x.estimate, y.estimate);
  EXPECT_EQ(x.half_width, y.half_width);
}

TEST(VolumeMc, ProductLawAgainstJointSampling) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 5; ++t) {
    const auto inst = random_instance(2, 3, rng);
    const auto mu = mu_b_of(inst);
    const auto reg = region(inst, mu);
    int hit = 0;
    const int samples = 100000;
    for (int s = 0; s < samples; ++s) {
      SalienceProfile S;
      for (int b = 0; b < 2; ++b) S.push_back(SalienceVector::make(detail::sample_simplex(3, rng)));
      hit += contains(reg, S);
    }
    EXPECT_NEAR(volume_exact(reg), static_cast<double>(hit) / samples, 0.006);
  }
}

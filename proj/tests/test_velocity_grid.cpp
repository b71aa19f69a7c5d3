#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "granular/velocity_grid.hpp"

using namespace granular;

TEST(BuildGrid, DesktopGridHas1024Nodes) {
  const GridSpec g = build_grid(2, 8.0, 32);
  EXPECT_EQ(g.size(), 1024u);
  EXPECT_DOUBLE_EQ(g.spacing, 0.5);
}

TEST(BuildGrid, MidpointNodes) {
  const GridSpec g = build_grid(2, 1.0, 8);
  const double expected[] = {-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(g.coord(i), expected[i]);
}

TEST(BuildGrid, ThreeDimensionalCount) { EXPECT_EQ(build_grid(3, 6.0, 16).size(), 4096u); }

TEST(BuildGrid, RejectsInvalid) {
  EXPECT_THROW(build_grid(2, 8.0, 31), std::invalid_argument);
  EXPECT_THROW(build_grid(2, 8.0, 6), std::invalid_argument);
  EXPECT_THROW(build_grid(4, 8.0, 32), std::invalid_argument);
  EXPECT_THROW(build_grid(1, 8.0, 32), std::invalid_argument);
  EXPECT_THROW(build_grid(2, 0.0, 32), std::invalid_argument);
  EXPECT_THROW(build_grid(2, -1.0, 32), std::invalid_argument);
}

TEST(BuildGrid, NodeSetSymmetric) {
  const GridSpec g = build_grid(3, 2.0, 8);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec v = g.node(k), w = g.node(g.mirror(k));
    for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(v[a], -w[a]);
  }
}

TEST(BuildGrid, FlatIndexRoundTrip) {
  const GridSpec g = build_grid(3, 2.0, 8);
  for (std::size_t k = 0; k < g.size(); k += 37) EXPECT_EQ(g.flat_index(g.multi_index(k)), k);
  // axis 0 slowest
  EXPECT_DOUBLE_EQ(g.node(1)[2], g.coord(1));
  EXPECT_DOUBLE_EQ(g.node(64)[0], g.coord(1));
}

TEST(Quadrature, ZeroAndIndicator) {
  const GridSpec g = build_grid(2, 8.0, 32);
  Distribution f(g);
  EXPECT_EQ(quadrature(f), 0.0);
  f[17] = 1.0;
  EXPECT_DOUBLE_EQ(quadrature(f), 0.25);
}

// Gauss-Hermite product rule with 40 nodes integrates 1 and v^2 exactly; the
// midpoint grid must agree with it.
TEST(Quadrature, MaxwellianMassMatchesGaussHermite) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(quadrature(m), 1.0, 1e-6);
}

TEST(Maxwellian, MomentsMatchGaussHermite) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const MacroFields mf = moments(maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0));
  EXPECT_NEAR(mf.mass, 1.0, 1e-10);
  EXPECT_NEAR((*mf.velocity)[0], 0.0, 1e-14);
  EXPECT_NEAR((*mf.velocity)[1], 0.0, 1e-14);
  EXPECT_NEAR(*mf.temperature, 1.0, 1e-10);
}

TEST(Maxwellian, FourthMomentMatchesGaussHermite) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(integrate(m, [](const Vec& v) { return std::pow(v[0], 4); }), 3.0, 1e-9);
}

TEST(Maxwellian, ShiftedMoments) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const MacroFields mf = moments(maxwellian(g, 2.0, {0.5, -0.25, 0.0}, 0.8));
  EXPECT_NEAR(mf.mass, 2.0, 1e-9);
  EXPECT_NEAR((*mf.velocity)[0], 0.5, 1e-9);
  EXPECT_NEAR((*mf.velocity)[1], -0.25, 1e-9);
  EXPECT_NEAR(*mf.temperature, 0.8, 1e-9);
}

TEST(Maxwellian, EvenWhenCentred) {
  const GridSpec g = build_grid(2, 4.0, 16);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.3);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_DOUBLE_EQ(m[k], m[g.mirror(k)]);
}

TEST(Maxwellian, LinearInMass) {
  const GridSpec g = build_grid(2, 4.0, 16);
  const Distribution a = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 0.7);
  const Distribution b = maxwellian(g, 2.0, {0.0, 0.0, 0.0}, 0.7);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_DOUBLE_EQ(b[k], 2.0 * a[k]);
}

TEST(Maxwellian, RejectsNonPositiveTemperature) {
  const GridSpec g = build_grid(2, 4.0, 16);
  EXPECT_THROW(maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(maxwellian(g, 1.0, {0.0, 0.0, 0.0}, -1.0), std::invalid_argument);
}

TEST(Moments, ZeroMassLeavesTemperatureUndefined) {
  const GridSpec g = build_grid(2, 4.0, 16);
  const MacroFields mf = moments(Distribution(g));
  EXPECT_FALSE(mf.temperature.has_value());
  EXPECT_FALSE(mf.velocity.has_value());
}

TEST(Laplacian, QuadraticInterior) {
  const GridSpec g = build_grid(2, 4.0, 16);
  const Distribution f = Distribution::sample(g, [](const Vec& v) { return v[0] * v[0] + v[1] * v[1]; });
  const Distribution l = laplacian(f);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.multi_index(k);
    if (idx[0] == 0 || idx[0] == 15 || idx[1] == 0 || idx[1] == 15) continue;
    EXPECT_NEAR(l[k], 4.0, 1e-12);
  }
}

TEST(Laplacian, MaxwellianSecondOrderConvergence) {
  auto err = [](int n) {
    const GridSpec g = build_grid(2, 8.0, n);
    const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
    const Distribution l = laplacian(m);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(l[k] - (norm2(g.node(k), 2) - 2.0) * m[k]));
    return e;
  };
  const double e64 = err(64), e128 = err(128);
  EXPECT_LT(e64, 6e-3);
  EXPECT_NEAR(e64 / e128, 4.0, 0.2);
}

// reference: 2 pi * integral_0^inf r exp(-r^2/2) exp(0.1 sqrt r) dr / (2 pi)
TEST(WeightedNorm, MaxwellianMatchesRadialIntegral) {
  const GridSpec g = build_grid(2, 8.0, 64);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(weighted_norm(m, ExpWeight{}), 1.1143227735190869, 1e-4);
}

TEST(WeightedNorm, ExceedsPlainL1) {
  const GridSpec g = build_grid(2, 4.0, 16);
  Distribution f = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  f[3] = -f[3];
  EXPECT_GT(weighted_norm(f, ExpWeight(0.2, 0.5)), 1.0);
}

TEST(ExpWeight, RejectsInvalid) {
  EXPECT_THROW(ExpWeight(0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(ExpWeight(0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(ExpWeight(0.0, 0.5), std::invalid_argument);
  EXPECT_NO_THROW(ExpWeight(0.3, 0.9));
}

TEST(ThirdMoment, VanishesForEvenProfiles) {
  const GridSpec g = build_grid(2, 6.0, 24);
  const Vec q = third_moment_vector(maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0));
  EXPECT_NEAR(q[0], 0.0, 1e-14);
  EXPECT_NEAR(q[1], 0.0, 1e-14);
}

// integral v1 |v|^2 M_{1,u,1} = u1 (|u|^2 + (d + 2))
TEST(ThirdMoment, ShiftedMaxwellian) {
  const GridSpec g = build_grid(2, 8.0, 48);
  const Vec q = third_moment_vector(maxwellian(g, 1.0, {0.3, 0.0, 0.0}, 1.0));
  EXPECT_NEAR(q[0], 0.3 * (0.09 + 4.0), 1e-8);
  EXPECT_NEAR(q[1], 0.0, 1e-12);
}

TEST(Distribution, ArithmeticAndFiniteness) {
  const GridSpec g = build_grid(2, 2.0, 8);
  Distribution a = Distribution::sample(g, [](const Vec& v) { return v[0]; });
  Distribution b = 2.0 * a;
  b -= a;
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_DOUBLE_EQ(b[k], a[k]);
  EXPECT_TRUE(a.all_finite());
  a[0] = std::nan("");
  EXPECT_FALSE(a.all_finite());
  const Distribution other(build_grid(2, 3.0, 8));
  EXPECT_THROW(b.require_same_grid(other), std::invalid_argument);
}

TEST(SphereArea, Values) {
  EXPECT_DOUBLE_EQ(sphere_area(2), 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(sphere_area(3), 4.0 * std::numbers::pi);
}

// divergence theorem: the boundary flux of a unit Gaussian at L = 8 is tiny
TEST(Laplacian, MaxwellianHasNoNetFlux) {
  const GridSpec g = build_grid(2, 8.0, 32);
  EXPECT_LT(std::abs(quadrature(laplacian(maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0)))), 1e-8);
}

TEST(Laplacian, ConstantVanishesInInterior) {
  const GridSpec g = build_grid(2, 2.0, 8);
  const Distribution l = laplacian(Distribution::sample(g, [](const Vec&) { return 3.0; }));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto idx = g.multi_index(k);
    const bool edge = idx[0] == 0 || idx[0] == 7 || idx[1] == 0 || idx[1] == 7;
    if (edge) {
      EXPECT_LT(l[k], 0.0);
    } else {
      EXPECT_EQ(l[k], 0.0);
    }
  }
}

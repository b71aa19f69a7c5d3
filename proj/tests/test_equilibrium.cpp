#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "granular/equilibrium.hpp"

using namespace granular;

namespace {

struct Small {
  GridSpec grid = build_grid(2, 6.0, 20);
  SphereQuadrature quad = SphereQuadrature::build(2, 16);
  CrossSection b = unit_temperature_cross_section(grid, CrossSection::constant(1.0), quad);
};

}  // namespace

// integral |v|^3 M_{1,0,1} in d = 2 is 3 sqrt(pi/2)
TEST(ElasticTemperature, ThirdMomentMatchesClosedForm) {
  EXPECT_NEAR(maxwellian_third_moment(build_grid(2, 8.0, 32)), 3.7599424119465008, 2e-4);
}

// (1/2) 2^{2/3} (pi/4 * 3 sqrt(pi/2))^{-2/3}
TEST(ElasticTemperature, ConstantCrossSectionMatchesClosedForm) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  EXPECT_NEAR(elastic_temperature(g, CrossSection::constant(1.0), q), 0.38560496605774707, 2e-5);
}

TEST(ElasticTemperature, ScalesWithCrossSection) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const double t1 = elastic_temperature(g, CrossSection::constant(1.0), q);
  const double t8 = elastic_temperature(g, CrossSection::constant(8.0), q);
  EXPECT_NEAR(t8, t1 / 4.0, 1e-14);
}

TEST(ElasticTemperature, UnitTemperatureCrossSection) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const CrossSection b = unit_temperature_cross_section(g, CrossSection::constant(1.0), q);
  EXPECT_NEAR(elastic_temperature(g, b, q), 1.0, 1e-14);
  EXPECT_NEAR(b(0.0), 0.23944949616688875, 1e-4);
  EXPECT_NE(b.name.find("unit-temperature"), std::string::npos);
}

// The elastic Maxwellian at T1 satisfies the balance equation on the grid.
TEST(Balance, ElasticMaxwellianSatisfiesBalance) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const CrossSection b = CrossSection::constant(1.0);
  const Distribution f1 = elastic_equilibrium(g, b, q);
  EXPECT_NEAR(dissipation(f1, f1, b, q), 2.0, 1e-3);
  EXPECT_LT(balance_residual(f1, 1.0, b, q), 4e-3);
}

TEST(SolveEquilibrium, ElasticShortcutReturnsMaxwellian) {
  Small s;
  const EquilibriumResult r = solve_equilibrium(1.0, s.grid, s.b, s.quad);
  const Distribution m = maxwellian(s.grid, 1.0, {0.0, 0.0, 0.0}, elastic_temperature(s.grid, s.b, s.quad));
  ASSERT_EQ(r.method, "elastic");
  for (std::size_t k = 0; k < m.size(); ++k) EXPECT_EQ(r.profile[k], m[k]);
}

TEST(SolveEquilibrium, RejectsInvalidAlpha) {
  Small s;
  EXPECT_THROW(solve_equilibrium(1.2, s.grid, s.b, s.quad), std::invalid_argument);
  EXPECT_THROW(solve_equilibrium(0.0, s.grid, s.b, s.quad), std::invalid_argument);
}

TEST(SolveEquilibrium, NewtonConvergesWithConstraints) {
  Small s;
  const EquilibriumResult r = solve_equilibrium(0.9, s.grid, s.b, s.quad);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.residual, 1e-5);
  EXPECT_NEAR(r.macro.mass, 1.0, 1e-10);
  EXPECT_NEAR((*r.macro.velocity)[0], 0.0, 1e-10);
  EXPECT_NEAR((*r.macro.velocity)[1], 0.0, 1e-10);
  EXPECT_LT(r.clipped_mass, 1e-6);
  EXPECT_LE(r.history.back(), r.history.front());
}

TEST(SolveEquilibrium, RelaxationAgreesWithNewton) {
  Small s;
  EquilibriumOptions opt;
  const EquilibriumResult n = solve_equilibrium(0.9, s.grid, s.b, s.quad, opt);
  opt.method = EquilibriumMethod::relaxation;
  opt.tol = 1e-6;
  opt.dt = 0.1;
  const EquilibriumResult r = solve_equilibrium(0.9, s.grid, s.b, s.quad, opt);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.method, "relaxation");
  double diff = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) diff += std::abs(n.profile[k] - r.profile[k]);
  diff *= s.grid.cell_volume();
  EXPECT_LT(diff, 1e-4);
  EXPECT_NEAR(*r.macro.temperature, *n.macro.temperature, 1e-5);
}

TEST(SolveEquilibrium, BalanceAndTemperatureNearElastic) {
  const GridSpec g = build_grid(2, 6.0, 16);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const CrossSection b = unit_temperature_cross_section(g, CrossSection::constant(1.0), q);
  const EquilibriumResult r95 = solve_equilibrium(0.95, g, b, q);
  const EquilibriumResult r99 = solve_equilibrium(0.99, g, b, q);
  EXPECT_LE(r95.balance, 0.05 * 4.0);
  EXPECT_LE(r99.balance, 0.05 * 4.0);
  const double e95 = std::abs(*r95.macro.temperature - 1.0), e99 = std::abs(*r99.macro.temperature - 1.0);
  EXPECT_LT(e99, 0.1);
  EXPECT_LT(e99, e95);
}

TEST(Translate, ShiftsMaxwellianMean) {
  const GridSpec g = build_grid(2, 6.0, 32);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  const Distribution t = translate(m, {0.1, 0.0, 0.0});
  EXPECT_NEAR((*moments(t).velocity)[0], -0.1, 2e-3);
}

TEST(StationaryResidual, IncludesHeating) {
  Small s;
  const Distribution m = elastic_equilibrium(s.grid, s.b, s.quad);
  const CollisionKernel k1(s.grid, 1.0, s.b, s.quad), k9(s.grid, 0.9, s.b, s.quad);
  const Distribution r = stationary_residual(k9, m, 1) - k9.collide(m, m);
  const Distribution lap = 0.1 * laplacian(m);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(r[i], lap[i], 1e-14);
}

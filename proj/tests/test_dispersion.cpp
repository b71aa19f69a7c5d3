#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "granular/dispersion.hpp"
#include "granular/equilibrium.hpp"
#include "granular/spectrum.hpp"

using namespace granular;

namespace {

struct Elastic {
  GridSpec grid = build_grid(2, 6.0, 16);
  SphereQuadrature quad = SphereQuadrature::build(2, 16);
  CrossSection b = unit_temperature_cross_section(grid, CrossSection::constant(1.0), quad);
  double t1 = elastic_temperature(grid, b, quad);
  Distribution f1 = elastic_equilibrium(grid, b, quad);
  LinearOperatorMatrix a1 = assemble_linearized(CollisionKernel(grid, 1.0, b, quad), f1);
};

const Elastic& elastic() {
  static const Elastic e;
  return e;
}

}  // namespace

TEST(Gram, VanishesAtZero) {
  const GramLimit g = gram_limit(0.0, 2, 1.0, 2.5);
  EXPECT_EQ(std::abs(g.det), 0.0);
}

TEST(Gram, VanishesAtAcousticRoot) {
  for (int d : {2, 3})
    for (double t : {0.5, 1.0, 1.7}) {
      const DispersionRoots r = dispersion_roots(d, t);
      const GramLimit g = gram_limit(r[1], d, t, 3.0);
      EXPECT_LT(std::abs(g.det), 1e-12 * t * t * t * t * t) << d << " " << t;
      EXPECT_NEAR(std::abs(r[1]), std::sqrt(t + 2.0 * t / d), 1e-14);
    }
}

TEST(Gram, ClosedFormAtRandomPoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0), tt(0.3, 2.0), cc(0.0, 5.0);
  for (int k = 0; k < 100; ++k) {
    const int d = 2 + k % 2;
    const GramLimit g = gram_limit(cplx(u(rng), u(rng)), d, tt(rng), cc(rng));
    EXPECT_LT(g.relative_error, 1e-12);
  }
}

TEST(Gram, IndependentOfCnu) {
  const cplx z(0.3, -0.8);
  const cplx a = gram_limit(z, 2, 1.2, 0.0).det, b = gram_limit(z, 2, 1.2, 4.4).det;
  EXPECT_LT(std::abs(a - b), 1e-12 * std::abs(a));
}

TEST(Roots, ConjugateAndOrdered) {
  const DispersionRoots r = dispersion_roots(3, 1.0);
  EXPECT_EQ(r[0], cplx(0.0, 0.0));
  EXPECT_EQ(r[-1], std::conj(r[1]));
  EXPECT_NEAR(r[1].imag(), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_THROW(dispersion_roots(2, 0.0), std::invalid_argument);
}

TEST(Roots, StatedSpeedAgreesAtUnitTemperature) {
  for (int d : {2, 3}) EXPECT_NEAR(acoustic_speed_stated(d, 1.0), std::abs(dispersion_roots(d, 1.0)[1]), 1e-15);
  EXPECT_GT(std::abs(acoustic_speed_stated(2, 2.0) - std::abs(dispersion_roots(2, 2.0)[1])), 0.1);
}

TEST(Transverse, LinearInZ) {
  EXPECT_EQ(transverse_limit(cplx(0.0, 2.0), 1.5), cplx(0.0, 3.0));
}

TEST(CNu, ConstantFrequencyGivesDT) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.3);
  const Distribution one = Distribution::sample(g, [](const Vec&) { return 1.0; });
  EXPECT_NEAR(c_nu(m, one), 2.6, 1e-8);
  EXPECT_THROW(c_nu(m, Distribution(g)), std::invalid_argument);
}

// Hard disks with b constant: nu(v) = c integral |v - w| M(w) dw, and
// c_nu = <nu |v|^2> / <nu> = 5/2 in d = 2 at T = 1.
TEST(CNu, HardDiskCollisionFrequency) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const CrossSection b = unit_temperature_cross_section(g, CrossSection::constant(1.0), q);
  const Distribution f1 = elastic_equilibrium(g, b, q);
  EXPECT_NEAR(c_nu(f1, loss_potential(f1, b, q)), 2.5, 5e-3);
}

TEST(CNu, InvariantUnderCrossSectionScale) {
  const Elastic& e = elastic();
  const Distribution nu = loss_potential(e.f1, e.b, e.quad);
  EXPECT_NEAR(c_nu(e.f1, nu), c_nu(e.f1, 3.0 * nu), 1e-13);
}

TEST(EnergySlope, MatchesAnalytic) {
  const GridSpec g = build_grid(2, 8.0, 32);
  const SphereQuadrature q = SphereQuadrature::build(2, 16);
  const CrossSection b = unit_temperature_cross_section(g, CrossSection::constant(1.0), q);
  const double t1 = elastic_temperature(g, b, q);
  const EnergyEigenvectorData d = energy_slope(elastic_equilibrium(g, b, q), t1, b, q);
  EXPECT_NEAR(d.e1_analytic, 3.0, 1e-12);
  EXPECT_NEAR(d.e1_numeric / d.e1_analytic, 1.0, 0.01);
  EXPECT_LT(std::abs(d.mass), 1e-9);
  EXPECT_NEAR(weighted_norm(d.h0, ExpWeight{}), 1.0, 1e-12);
}

TEST(EnergySlope, IndependentOfNormalization) {
  const Elastic& e = elastic();
  const EnergyEigenvectorData a = energy_slope(e.f1, e.t1, e.b, e.quad);
  const EnergyEigenvectorData c = energy_slope(e.f1, e.t1, e.b, e.quad, ExpWeight(0.3, 0.8));
  EXPECT_NE(a.c0, c.c0);
  EXPECT_NEAR(a.e1_numeric, c.e1_numeric, 1e-10 * a.e1_numeric);
}

// lambda2 from perturbation theory against finite differences of the
// computed branches.
TEST(Induction, AgreesWithFiniteDifferences) {
  const Elastic& e = elastic();
  const Vec omega{1.0, 0.0, 0.0};
  const FourierSolver s(e.a1, omega);
  const BranchFitReport rep = fit_branches(s, 0.02);
  for (std::size_t i = 0; i < rep.branches.size(); ++i) {
    const Branch& br = rep.branches[i];
    const InductionResult r = lambda2_induction(omega, e.a1, br.samples[1].vector, rep.fits[i].lambda1);
    EXPECT_GT(r.selection_overlap, 0.9) << "label " << br.label;
    EXPECT_LT(r.solvability, 1e-8);
    const double fd = rep.fits[i].lambda2.real();
    EXPECT_NEAR(r.lambda2.real(), fd, 0.1 * std::abs(fd)) << "label " << br.label;
    EXPECT_LT(std::abs(r.lambda2.imag()), 1e-6 * std::abs(r.lambda2));
  }
}

TEST(Induction, AcousticClusterIsSimple) {
  const Elastic& e = elastic();
  const Vec omega{1.0, 0.0, 0.0};
  const FourierSolver s(e.a1, omega);
  const std::vector<Branch> br = track_branches(s, {0.0, 0.02});
  const Branch& plus = br[2];
  ASSERT_EQ(plus.label, 1);
  const double speed = std::abs(dispersion_roots(2, e.t1)[1]);
  const InductionResult r = lambda2_induction(omega, e.a1, plus.samples[1].vector, cplx(0.0, speed));
  EXPECT_EQ(r.cluster_size, 1);
  EXPECT_GT(r.selection_overlap, 0.9);
  EXPECT_GT(r.first_order.imag(), 0.0);
  EXPECT_NEAR(std::abs(r.first_order), speed, 0.02 * speed);
  EXPECT_GT(r.singular_gap, 1e6);
}

TEST(Induction, RejectsComplexOperator) {
  const Elastic& e = elastic();
  const LinearOperatorMatrix f = assemble_fourier(e.a1, {0.1, 0.0, 0.0});
  EXPECT_THROW(lambda2_induction({1.0, 0.0, 0.0}, f, CVector::Zero(f.size()), 0.0), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "granular/equilibrium.hpp"
#include "granular/spectrum.hpp"

using namespace granular;

namespace {

struct Elastic {
  GridSpec grid = build_grid(2, 6.0, 16);
  SphereQuadrature quad = SphereQuadrature::build(2, 16);
  CrossSection b = unit_temperature_cross_section(grid, CrossSection::constant(1.0), quad);
  Distribution f1 = elastic_equilibrium(grid, b, quad);
  LinearOperatorMatrix a1 = assemble_linearized(CollisionKernel(grid, 1.0, b, quad), f1);
};

const Elastic& elastic() {
  static const Elastic e;
  return e;
}

std::vector<cplx> sorted(std::vector<cplx> v) {
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    if (std::abs(a.real() - b.real()) > 1e-7) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

std::vector<cplx> values(const EigenDecomposition& ed) {
  return std::vector<cplx>(ed.values.data(), ed.values.data() + ed.values.size());
}

}  // namespace

TEST(Spectrum, KernelHasDimensionDPlusTwo) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  const SpectrumSummary sm = s.summary(0.0, true);
  ASSERT_EQ(sm.hydro.size(), 4u);
  for (const auto& p : sm.hydro) EXPECT_LT(std::abs(p.value), 1e-10 * sm.gap);
  EXPECT_GT(sm.gap, 0.3);
  EXPECT_TRUE(sm.separated);
  EXPECT_LT(sm.max_residual, 1e-8);
}

TEST(Spectrum, ReflectionRouteMatchesGeneralRoute) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {0.0, 1.0, 0.0});
  ASSERT_TRUE(s.reflected());
  EXPECT_LT(s.reflection_defect(), 1e-12);
  const auto a = sorted(values(s.decompose(0.2, false)));
  const auto b = sorted(values(s.decompose(0.2, false, true)));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-9);
}

TEST(Spectrum, ReflectedEigenvectorsSolveComplexProblem) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  const SpectrumSummary sm = s.summary(0.15, true);
  EXPECT_LT(sm.max_residual, 1e-8);
}

TEST(Spectrum, ConjugationSymmetry) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  auto plus = values(s.decompose(0.1, false, true));
  for (auto& z : plus) z = std::conj(z);
  const auto a = sorted(plus);
  const auto b = sorted(values(s.decompose(-0.1, false, true)));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-9);
}

TEST(Spectrum, RotationByQuarterTurn) {
  const Elastic& e = elastic();
  const FourierSolver sx(e.a1, {1.0, 0.0, 0.0}), sy(e.a1, {0.0, 1.0, 0.0});
  const SpectrumSummary a = sx.summary(0.1, false), b = sy.summary(0.1, false);
  std::vector<cplx> va, vb;
  for (const auto& p : a.hydro) va.push_back(p.value);
  for (const auto& p : b.hydro) vb.push_back(p.value);
  va = sorted(va);
  vb = sorted(vb);
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_LT(std::abs(va[i] - vb[i]), 1e-9);
}

TEST(Spectrum, DiagonalDirectionUsesGeneralRoute) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 1.0, 0.0});
  EXPECT_FALSE(s.reflected());
  EXPECT_NEAR(s.omega()[0], std::sqrt(0.5), 1e-15);
  EXPECT_THROW(FourierSolver(e.a1, {0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(Branches, TrackingLabelsAndCounts) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  const std::vector<Branch> br = track_branches(s, {0.0, 0.05, 0.1, 0.15});
  ASSERT_EQ(br.size(), 4u);
  std::vector<int> labels;
  for (const auto& b : br) {
    labels.push_back(b.label);
    EXPECT_FALSE(b.failed) << b.failure;
    EXPECT_EQ(b.samples.size(), 4u);
  }
  EXPECT_EQ(labels, (std::vector<int>{-1, 0, 1, 2}));
  // acoustic pair conjugate, the others real
  EXPECT_GT(br[2].samples[1].lambda.imag(), 0.0);
  EXPECT_NEAR(br[0].samples[2].lambda.imag(), -br[2].samples[2].lambda.imag(), 1e-9);
  EXPECT_LT(std::abs(br[1].samples[2].lambda.imag()), 1e-9);
  EXPECT_LT(std::abs(br[3].samples[2].lambda.imag()), 1e-9);
  // all branches damped away from zero
  for (const auto& b : br) EXPECT_LT(b.samples.back().lambda.real(), 0.0);
}

TEST(Branches, ExactlyOneAcousticPairWithNonzeroSlope) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  const BranchFitReport rep = fit_branches(s, 0.02);
  int nonzero = 0;
  for (const auto& f : rep.fits) {
    if (std::abs(f.lambda1) > 0.1) ++nonzero;
    EXPECT_GT(f.lambda2.real(), 0.0);
  }
  EXPECT_EQ(nonzero, 2);
  EXPECT_LT(rep.symmetry_deviation, 1e-9 * rep.symmetry_scale);
}

TEST(Branches, RejectsBadFrequencyLists) {
  const Elastic& e = elastic();
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  EXPECT_THROW(track_branches(s, {}), std::invalid_argument);
  EXPECT_THROW(track_branches(s, {0.1, 0.05}), std::invalid_argument);
  EXPECT_THROW(track_branches(s, {-0.1, 0.0}), std::invalid_argument);
}

// lambda(rho) = 2i rho - 0.7 rho^2 + 0.3 i rho^3 - 0.2 rho^4
TEST(FitExpansion, RecoversPolynomialCoefficients) {
  auto lam = [](double r) { return cplx(-0.7 * r * r - 0.2 * r * r * r * r, 2.0 * r + 0.3 * r * r * r); };
  CentredSamples cs{0.01, lam(0.0), lam(0.01), lam(-0.01), lam(0.02), lam(-0.02)};
  const ExpansionFit f = fit_expansion(1, cs);
  EXPECT_NEAR(f.lambda1.imag(), 2.0, 1e-9);
  EXPECT_NEAR(f.lambda1.real(), 0.0, 1e-12);
  EXPECT_NEAR(f.lambda2.real(), 0.7, 1e-8);
  EXPECT_THROW(fit_expansion(0, CentredSamples{}), std::invalid_argument);
}

TEST(FitEnergySlope, RecoversLine) {
  const std::vector<double> al{1.0, 0.99, 0.97, 0.95};
  std::vector<double> v;
  for (double a : al) v.push_back(0.01 - 3.0 * (1.0 - a));
  double res = 1.0;
  EXPECT_NEAR(fit_energy_slope(al, v, &res), 3.0, 1e-12);
  EXPECT_LT(res, 1e-14);
  EXPECT_THROW(fit_energy_slope({1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(fit_energy_slope({0.9, 0.9}, {0.0, 1.0}), std::invalid_argument);
}

TEST(Overlap, NormalizedAndPhaseInvariant) {
  CVector a(3), b(3);
  a << 1.0, cplx(0.0, 2.0), 0.5;
  b = a * cplx(0.0, -3.0);
  EXPECT_NEAR(overlap(a, b), 1.0, 1e-15);
  b << 0.0, 0.0, 0.0;
  EXPECT_EQ(overlap(a, b), 0.0);
}

TEST(MatchByOverlap, PrefersLargestTotalOverlap) {
  SpectrumSummary cur;
  CVector e0 = CVector::Zero(3), e1 = CVector::Zero(3);
  e0[0] = 1.0;
  e1[1] = 1.0;
  cur.hydro.push_back({cplx(1.0, 0.0), e1, 0.0});
  cur.hydro.push_back({cplx(2.0, 0.0), e0, 0.0});
  std::vector<double> ov;
  const auto m = match_by_overlap({e0, e1}, {cplx(0.0), cplx(0.0)}, cur, ov);
  EXPECT_EQ(m[0], 1u);
  EXPECT_EQ(m[1], 0u);
  EXPECT_DOUBLE_EQ(ov[0], 1.0);
}

TEST(Essential, BoundAndCollisionFrequency) {
  const Elastic& e = elastic();
  const Distribution nu = loss_potential(e.f1, e.b, e.quad);
  const double nu0 = collision_frequency_floor(nu);
  EXPECT_GT(nu0, 0.0);
  EXPECT_GE(collision_frequency_ceiling(nu), nu0);
  const FourierSolver s(e.a1, {1.0, 0.0, 0.0});
  std::vector<SpectrumSummary> sweep;
  for (double r : {0.0, 0.1, 0.2}) sweep.push_back(s.summary(r, false));
  const EssentialReport rep = essential_bound_check(sweep, nu0, sweep.front().gap);
  EXPECT_TRUE(rep.below_zero);
  EXPECT_TRUE(rep.hydro_clear);
  EXPECT_LT(rep.max_hydro_real, 1e-9);
  EXPECT_TRUE(rep.tracks_nu0) << "ratio " << rep.ratio;
}

TEST(FullSpectrum, ResidualsSmall) {
  const Elastic& e = elastic();
  const auto pairs = full_spectrum(e.a1, true);
  double worst = 0.0;
  for (const auto& p : pairs) worst = std::max(worst, p.residual);
  EXPECT_LT(worst, 1e-8);
  const SpectrumSummary h = hydrodynamic_set(pairs, 2);
  EXPECT_EQ(h.hydro.size(), 4u);
  EXPECT_GT(h.gap, 0.0);
}

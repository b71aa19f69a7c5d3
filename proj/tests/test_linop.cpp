#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "granular/equilibrium.hpp"
#include "granular/linop.hpp"

using namespace granular;

namespace {

struct Fixture {
  GridSpec grid = build_grid(2, 5.0, 14);
  SphereQuadrature quad = SphereQuadrature::build(2, 16);
  CrossSection b = unit_temperature_cross_section(grid, CrossSection::constant(1.0), quad);
  Distribution f1 = elastic_equilibrium(grid, b, quad);
};

Distribution random_profile(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const Distribution m = maxwellian(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
  Distribution h(g);
  for (std::size_t k = 0; k < g.size(); ++k) h[k] = nd(rng) * m[k];
  return h;
}

}  // namespace

TEST(Assemble, ColumnsMatchOperatorApplication) {
  Fixture s;
  for (double alpha : {1.0, 0.9}) {
    const CollisionKernel k(s.grid, alpha, s.b, s.quad);
    const LinearOperatorMatrix a = assemble_linearized(k, s.f1, 2);
    const Distribution h = random_profile(s.grid, 7);
    const Distribution direct = apply_linearized(k, h, s.f1);
    const Distribution viamatrix = matrix_apply(a, h);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(direct[i], viamatrix[i], 1e-12);
  }
}

// Conservation of mass, momentum and (for alpha = 1) energy makes 1, v and
// |v|^2 left null vectors.
TEST(Assemble, ConservedQuantitiesAreLeftNullVectors) {
  Fixture s;
  const CollisionKernel k(s.grid, 1.0, s.b, s.quad);
  const LinearOperatorMatrix a = assemble_linearized(k, s.f1);
  const double scale = a.real.cwiseAbs().maxCoeff();
  for (int which = 0; which < 4; ++which) {
    RVector psi(s.grid.size());
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      const Vec v = s.grid.node(i);
      psi[i] = which == 0 ? 1.0 : which == 3 ? norm2(v, 2) : v[which - 1];
    }
    EXPECT_LT((psi.transpose() * a.real).cwiseAbs().maxCoeff(), 1e-12 * scale * (1.0 + psi.cwiseAbs().maxCoeff()));
  }
}

TEST(Assemble, InelasticKeepsMomentumNotEnergy) {
  Fixture s;
  const CollisionKernel k(s.grid, 0.8, s.b, s.quad);
  LinearOperatorMatrix a = assemble_linearized(k, s.f1);
  a.real -= 0.2 * laplacian_matrix(s.grid);
  RVector e(s.grid.size()), v1(s.grid.size());
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    e[i] = norm2(s.grid.node(i), 2);
    v1[i] = s.grid.node(i)[0];
  }
  EXPECT_LT((v1.transpose() * a.real).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_GT((e.transpose() * a.real).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(LaplacianMatrix, MatchesStencil) {
  const GridSpec g = build_grid(3, 2.0, 8);
  const RMatrix l = laplacian_matrix(g);
  const Distribution f = Distribution::sample(g, [](const Vec& v) { return std::sin(v[0]) * std::cos(2.0 * v[2]) + v[1]; });
  const Distribution d = laplacian(f);
  Eigen::Map<const RVector> x(f.values.data(), f.size());
  const RVector y = l * x;
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(y[i], d[i], 1e-12);
}

TEST(Fourier, AddsImaginaryTransport) {
  Fixture s;
  const LinearOperatorMatrix a = assemble_linearized(CollisionKernel(s.grid, 1.0, s.b, s.quad), s.f1);
  const Vec gamma{0.3, 0.0, 0.0};
  const LinearOperatorMatrix f = assemble_fourier(a, gamma);
  ASSERT_TRUE(f.is_complex());
  for (Eigen::Index k = 0; k < f.complex.rows(); k += 13) {
    EXPECT_DOUBLE_EQ(f.complex(k, k).real(), a.real(k, k));
    EXPECT_NEAR(f.complex(k, k).imag(), -0.3 * s.grid.node(k)[0], 1e-15);
  }
  EXPECT_THROW(assemble_fourier(f, gamma), std::invalid_argument);
}

TEST(Split, PartsSumToOperator) {
  Fixture s;
  const CollisionKernel k(s.grid, 0.9, s.b, s.quad);
  const LinearOperatorMatrix a = assemble_fourier(assemble_linearized(k, s.f1), {0.0, 0.2, 0.0});
  const Distribution nu = loss_potential(s.f1, s.b, s.quad);
  const OperatorSplit sp = split_operator(a, nu);
  EXPECT_LT((sp.local + sp.remainder - a.complex).cwiseAbs().maxCoeff(), 1e-14);
}

// Direct eigensolve of the local part: its spectrum sits left of -min nu.
TEST(Split, LocalPartBoundedByCollisionFrequency) {
  Fixture s;
  const CollisionKernel k(s.grid, 0.95, s.b, s.quad);
  const LinearOperatorMatrix a = assemble_fourier(assemble_linearized(k, s.f1), {0.2, 0.0, 0.0});
  const Distribution nu = loss_potential(s.f1, s.b, s.quad);
  const OperatorSplit sp = split_operator(a, nu);
  const EigenDecomposition ed = eig(CMatrix(sp.local), false);
  double nmin = 1e300;
  for (double x : nu.values) nmin = std::min(nmin, x);
  EXPECT_LE(ed.values.real().maxCoeff(), -nmin + 1e-10);
}

TEST(GainSymmetry, DefectVanishes) {
  Fixture s;
  const CollisionKernel k(s.grid, 0.9, s.b, s.quad);
  EXPECT_LT(gain_symmetry_defect(k, s.f1, 3, 1u), 1e-12);
}

TEST(Assemble, ThreadsGiveIdenticalMatrix) {
  Fixture s;
  const CollisionKernel k(s.grid, 0.9, s.b, s.quad);
  const RMatrix a1 = assemble_linearized(k, s.f1, 1).real;
  const RMatrix a4 = assemble_linearized(k, s.f1, 4).real;
  EXPECT_EQ((a1 - a4).cwiseAbs().maxCoeff(), 0.0);
}

#pragma once

// Dense assembly of the linearized operator L_alpha and of its Fourier family
// L_{alpha,gamma} = -i (gamma . v) + L_alpha.

#include <cmath>
#include <random>
#include <stdexcept>

#include "granular/collision.hpp"
#include "granular/lapack.hpp"
#include "granular/parallel.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

struct LinearOperatorMatrix {
  GridSpec grid;
  double alpha = 1.0;
  Vec gamma{0.0, 0.0, 0.0};
  RMatrix real;     // L_alpha
  CMatrix complex;  // L_{alpha,gamma}; empty for the real operator
  double leakage = 0.0;

  bool is_complex() const { return complex.size() != 0; }
  Eigen::Index size() const { return real.rows(); }
};

struct OperatorSplit {
  CMatrix local;      // -(i gamma.v + nu) + (1 - alpha) Laplacian
  CMatrix remainder;  // everything else
};

/// L_alpha(g) = Q(g, F) + Q(F, g) + (1 - alpha) Laplacian(g).
inline Distribution apply_linearized(const CollisionKernel& kernel, const Distribution& g, const Distribution& F,
                                     int threads = 1) {
  g.require_same_grid(F);
  if (!(g.grid == kernel.grid())) throw std::invalid_argument("apply_linearized: grid mismatch");
  Distribution r = kernel.collide(g, F, threads);
  r += kernel.collide(F, g, threads);
  const double eps = 1.0 - kernel.alpha();
  if (eps != 0.0) r += eps * laplacian(g);
  return r;
}

/// Dense Laplacian with zero extension.
inline RMatrix laplacian_matrix(const GridSpec& grid) {
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  RMatrix m = RMatrix::Zero(n, n);
  const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
  std::size_t stride = 1;
  for (int a = grid.dim - 1; a >= 0; --a) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const int i = static_cast<int>((k / stride) % grid.points);
      m(k, k) -= 2.0 * inv_h2;
      if (i > 0) m(k, k - stride) += inv_h2;
      if (i < grid.points - 1) m(k, k + stride) += inv_h2;
    }
    stride *= grid.points;
  }
  return m;
}

/// Column k is the operator applied to the indicator of node k.
inline LinearOperatorMatrix assemble_linearized(const CollisionKernel& kernel, const Distribution& F,
                                                int threads = 1) {
  const GridSpec& grid = kernel.grid();
  if (!(F.grid == grid)) throw std::invalid_argument("assemble_linearized: grid mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  LinearOperatorMatrix op;
  op.grid = grid;
  op.alpha = kernel.alpha();
  op.real = RMatrix::Zero(n, n);
  const std::size_t blocks = std::min<std::size_t>(grid.size(), 64);
  std::vector<double> leaks(blocks, 0.0);
  parallel_blocks(blocks, threads, [&](std::size_t blk) {
    auto [lo, hi] = block_range(grid.size(), blocks, blk);
    for (std::size_t k = lo; k < hi; ++k) kernel.linearized_column(F, k, 1.0, op.real.col(k).data(), leaks[blk]);
  });
  for (double l : leaks) op.leakage += l;
  const double eps = 1.0 - kernel.alpha();
  if (eps != 0.0) op.real += eps * laplacian_matrix(grid);
  return op;
}

/// Multiplication by gamma . v as a diagonal.
inline RVector velocity_projection(const GridSpec& grid, const Vec& gamma) {
  RVector d(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) d[k] = dot(gamma, grid.node(k), grid.dim);
  return d;
}

inline LinearOperatorMatrix assemble_fourier(const LinearOperatorMatrix& a, const Vec& gamma) {
  if (a.is_complex()) throw std::invalid_argument("assemble_fourier: expects the real operator");
  LinearOperatorMatrix r;
  r.grid = a.grid;
  r.alpha = a.alpha;
  r.gamma = gamma;
  r.real = a.real;
  r.leakage = a.leakage;
  r.complex = a.real.cast<cplx>();
  const RVector gv = velocity_projection(a.grid, gamma);
  for (Eigen::Index k = 0; k < gv.size(); ++k) r.complex(k, k) -= cplx(0.0, gv[k]);
  return r;
}

inline OperatorSplit split_operator(const LinearOperatorMatrix& a, const Distribution& nu) {
  if (!(nu.grid == a.grid)) throw std::invalid_argument("split_operator: grid mismatch");
  const CMatrix full = a.is_complex() ? a.complex : CMatrix(a.real.cast<cplx>());
  OperatorSplit s;
  s.local = ((1.0 - a.alpha) * laplacian_matrix(a.grid)).cast<cplx>();
  const RVector gv = velocity_projection(a.grid, a.gamma);
  for (Eigen::Index k = 0; k < gv.size(); ++k) s.local(k, k) -= cplx(nu[k], gv[k]);
  s.remainder = full - s.local;
  return s;
}

inline Distribution matrix_apply(const LinearOperatorMatrix& a, const Distribution& g) {
  if (!(g.grid == a.grid)) throw std::invalid_argument("matrix_apply: grid mismatch");
  Eigen::Map<const RVector> x(g.values.data(), static_cast<Eigen::Index>(g.size()));
  RVector y = a.real * x;
  return Distribution(a.grid, std::vector<double>(y.data(), y.data() + y.size()));
}

/// Relative size of Q+(F,h) + Q+(h,F) - 2 Q+(F,h) over a few random h.
inline double gain_symmetry_defect(const CollisionKernel& kernel, const Distribution& F, int samples,
                                   unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Distribution h(F.grid);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = nd(rng) * F[k];
    const Distribution a = kernel.apply(F, h).gain;
    const Distribution b = kernel.apply(h, F).gain;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      num += std::abs(a[k] + b[k] - 2.0 * a[k]);
      den += std::abs(a[k]) + std::abs(b[k]);
    }
    if (den > 0.0) worst = std::max(worst, num / den);
  }
  return worst;
}

}  // namespace granular

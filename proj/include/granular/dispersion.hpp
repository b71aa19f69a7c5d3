#pragma once

// Closed-form reference values for the limit dispersion relation and the
// second-order induction step on the discrete elastic operator.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "granular/collision.hpp"
#include "granular/lapack.hpp"
#include "granular/linop.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// <phi, psi>_F = integral phi psi F.
template <class Fn>
double weighted_moment(const Distribution& F, Fn&& phi) {
  return integrate(F, phi);
}

/// c_nu = <nu, |v|^2>_F1 / <nu, 1>_F1.
inline double c_nu(const Distribution& F1, const Distribution& nu) {
  F1.require_same_grid(nu);
  const int d = F1.grid.dim;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < F1.size(); ++k) {
    const double w = F1[k] * nu[k];
    num += w * norm2(F1.grid.node(k), d);
    den += w;
  }
  if (den == 0.0) throw std::invalid_argument("c_nu: vanishing denominator");
  return num / den;
}

using Matrix3c = Eigen::Matrix3cd;

struct GramLimit {
  Matrix3c matrix;
  cplx det;
  cplx closed_form;
  double relative_error = 0.0;
};

/// Gram-like matrix of (z + i v1) in the basis (1, v1, |v|^2 - c_nu) weighted
/// by M_{1,0,T}, with exact Gaussian moments. Its determinant factors as
/// 2 T^3 z (d z^2 + (d + 2) T), independent of c_nu.
inline GramLimit gram_limit(cplx z, int d, double t, double cn) {
  if (!(t > 0.0)) throw std::invalid_argument("gram_limit: temperature must be positive");
  const cplx i(0.0, 1.0);
  const double m2 = d * t;                  // integral |v|^2 M
  const double m11 = t;                     // integral v1^2 M
  const double m112 = (d + 2.0) * t * t;    // integral v1^2 |v|^2 M
  const double m4 = d * (d + 2.0) * t * t;  // integral |v|^4 M
  GramLimit g;
  g.matrix << z, i * m11, z * (m2 - cn),                                    //
      i * m11, z * m11, i * (m112 - cn * m11),                              //
      z * (m2 - cn), i * (m112 - cn * m11), z * (m4 - 2.0 * cn * m2 + cn * cn);
  const Matrix3c& m = g.matrix;
  g.det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
          m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  g.closed_form = 2.0 * t * t * t * z * (static_cast<double>(d) * z * z + (d + 2.0) * t);
  const double scale = std::max({std::abs(g.closed_form), std::abs(g.det),
                                 2.0 * t * t * t * std::abs(z) * (d * std::norm(z) + (d + 2.0) * t)});
  g.relative_error = scale > 0.0 ? std::abs(g.det - g.closed_form) / scale : 0.0;
  if (g.relative_error > 1e-12)
    throw ConsistencyError("gram_limit: determinant disagrees with the closed form (rel " +
                           std::to_string(g.relative_error) + ")");
  return g;
}

struct DispersionRoots {
  std::array<cplx, 3> z;  // j = -1, 0, +1
  cplx operator[](int j) const { return z[j + 1]; }
};

/// Roots of the closed-form cubic: z_j = j i sqrt(T + 2T/d).
inline DispersionRoots dispersion_roots(int d, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("dispersion_roots: temperature must be positive");
  if (d < 1) throw std::invalid_argument("dispersion_roots: dimension must be positive");
  const double c = std::sqrt(t + 2.0 * t / d);
  return {{cplx(0.0, -c), cplx(0.0, 0.0), cplx(0.0, c)}};
}

/// Sound speed sqrt(T + 2T^2/d) as it appears in the expansion theorem; it
/// equals the cubic root modulus at T = 1.
inline double acoustic_speed_stated(int d, double t) { return std::sqrt(t + 2.0 * t * t / d); }

inline cplx transverse_limit(cplx z, double t) { return z * t; }

struct EnergyEigenvectorData {
  double c0 = 0.0;
  Distribution h0;
  double energy = 0.0;       // integral h0 |v|^2
  double pairing = 0.0;      // D(F1, h0)
  double mass = 0.0;
  double e1_numeric = 0.0;   // 4 D / E
  double e1_analytic = 0.0;  // 3 / T
};

inline EnergyEigenvectorData energy_slope(const Distribution& F1, double t1, const CrossSection& b,
                                          const SphereQuadrature& quad, const ExpWeight& w = {}) {
  const GridSpec& g = F1.grid;
  const int d = g.dim;
  EnergyEigenvectorData r;
  Distribution h = Distribution::sample(g, [&](const Vec& v) { return norm2(v, d) - d * t1; });
  h = hadamard(h, F1);
  r.c0 = 1.0 / weighted_norm(h, w);
  r.h0 = r.c0 * h;
  r.energy = integrate(r.h0, [d](const Vec& v) { return norm2(v, d); });
  r.pairing = dissipation(F1, r.h0, b, quad);
  r.mass = quadrature(r.h0);
  r.e1_numeric = 4.0 * r.pairing / r.energy;
  r.e1_analytic = 3.0 / t1;
  return r;
}

struct InductionResult {
  cplx lambda2;              // -(1/2) d^2 lambda / d rho^2
  cplx first_order;          // first-order eigenvalue of the selected cluster
  CVector h0;                // zeroth-order vector in the cluster closest to the given h0
  CVector h1;                // first-order correction orthogonal to the kernel
  double solvability = 0.0;  // |left-kernel projection of (mu + i omega.v) h0| / |rhs|
  double singular_gap = 0.0; // smallest retained / largest dropped singular value
  double smallest_retained = 0.0;
  double largest_dropped = 0.0;
  int cluster_size = 0;
  double selection_overlap = 0.0;
};

/// Degenerate perturbation theory for A1 - i rho diag(omega.v) around the
/// (d+2)-dimensional kernel of A1. The first-order problem on the kernel
/// splits it into clusters; inside the cluster whose first-order eigenvalue
/// is closest to lambda1 the second-order matrix is diagonalized and the
/// eigenvector best aligned with h0 is returned.
inline InductionResult lambda2_induction(const Vec& omega, const LinearOperatorMatrix& a1, const CVector& h0,
                                         cplx lambda1, double min_gap = 1e6) {
  if (a1.is_complex()) throw std::invalid_argument("lambda2_induction: expects the real operator");
  const GridSpec& g = a1.grid;
  const Eigen::Index n = a1.size();
  if (h0.size() != n) throw std::invalid_argument("lambda2_induction: vector size mismatch");
  const Eigen::Index kdim = g.dim + 2;
  InductionResult res;

  const RealSvd sv = svd(a1.real);
  res.smallest_retained = sv.singular[n - kdim - 1];
  res.largest_dropped = sv.singular[n - kdim];
  res.singular_gap = res.smallest_retained / std::max(res.largest_dropped, 1e-300);
  if (res.singular_gap < min_gap)
    throw std::runtime_error("lambda2_induction: no clear kernel of dimension d+2 (gap " +
                             std::to_string(res.singular_gap) + ")");

  const RMatrix kr = sv.vt.bottomRows(kdim).transpose();  // right kernel, n x kdim
  const RMatrix kl = sv.u.rightCols(kdim);                 // left kernel
  const RVector v = velocity_projection(g, omega);
  const cplx i(0.0, 1.0);

  // pencil  L^T (-i V) K y = mu L^T K y
  const CMatrix lk = (kl.transpose() * kr).cast<cplx>();
  const CMatrix lvk = -i * (kl.transpose() * v.asDiagonal() * kr).cast<cplx>();
  const CMatrix pencil = lk.partialPivLu().solve(lvk);
  Eigen::ComplexEigenSolver<CMatrix> es(pencil);
  const CVector mus = es.eigenvalues();
  const CMatrix ys = es.eigenvectors();

  // cluster around lambda1
  std::vector<Eigen::Index> cluster;
  Eigen::Index nearest = 0;
  for (Eigen::Index c = 0; c < mus.size(); ++c)
    if (std::abs(mus[c] - lambda1) < std::abs(mus[nearest] - lambda1)) nearest = c;
  const cplx mu = mus[nearest];
  const double ctol = 1e-6 * std::max(1.0, mus.cwiseAbs().maxCoeff());
  for (Eigen::Index c = 0; c < mus.size(); ++c)
    if (std::abs(mus[c] - mu) <= ctol) cluster.push_back(c);
  const Eigen::Index m = static_cast<Eigen::Index>(cluster.size());
  res.cluster_size = static_cast<int>(m);
  res.first_order = mu;

  CMatrix y(kdim, m);
  for (Eigen::Index c = 0; c < m; ++c) y.col(c) = ys.col(cluster[c]);
  const CMatrix x0 = kr.cast<cplx>() * y;

  // left cluster vectors of the pencil: rows z with z (lvk - mu lk) = 0
  const CMatrix pencil_t = (lvk - mu * lk).adjoint();
  Eigen::JacobiSVD<CMatrix> psv(pencil_t, Eigen::ComputeFullV | Eigen::ComputeFullU);
  const CMatrix zl = psv.matrixV().rightCols(m);  // columns span the null space of pencil_t
  const CMatrix zt = zl.adjoint();                  // m x kdim

  // rhs of the first-order equation and its solvability residual
  CMatrix rhs = x0;
  for (Eigen::Index k = 0; k < n; ++k) rhs.row(k) *= (mu + i * v[k]);
  res.solvability = (kl.transpose().cast<cplx>() * rhs).norm() / std::max(rhs.norm(), 1e-300);

  // pseudo-inverse with the kernel removed
  auto pinv = [&](const CMatrix& b) {
    CMatrix c = sv.u.leftCols(n - kdim).transpose().cast<cplx>() * b;
    for (Eigen::Index r = 0; r < n - kdim; ++r) c.row(r) /= sv.singular[r];
    return CMatrix(sv.vt.topRows(n - kdim).transpose().cast<cplx>() * c);
  };
  const CMatrix x1 = pinv(rhs);

  // second order: Z L^T [(-iV - mu) X1] = kappa Z L^T X0
  CMatrix t2 = x1;
  for (Eigen::Index k = 0; k < n; ++k) t2.row(k) *= (-i * v[k] - mu);
  const CMatrix lhs = zt * kl.transpose().cast<cplx>() * t2;
  const CMatrix mass = zt * kl.transpose().cast<cplx>() * x0;
  const CMatrix m2 = mass.partialPivLu().solve(lhs);
  Eigen::ComplexEigenSolver<CMatrix> es2(m2);

  // choose the second-order eigenvector best aligned with h0
  Eigen::Index best = 0;
  double best_ov = -1.0;
  for (Eigen::Index c = 0; c < m; ++c) {
    const CVector cand = x0 * es2.eigenvectors().col(c);
    const double ov = std::abs(cand.dot(h0)) / (cand.norm() * h0.norm());
    if (ov > best_ov) {
      best_ov = ov;
      best = c;
    }
  }
  res.selection_overlap = best_ov;
  const cplx kappa = es2.eigenvalues()[best];
  res.lambda2 = -kappa;
  CVector coeff = es2.eigenvectors().col(best);
  // phase aligned with the reference vector
  const cplx pr = h0.dot(x0 * coeff);
  if (std::abs(pr) > 0.0) coeff *= std::conj(pr) / std::abs(pr);
  res.h0 = x0 * coeff;
  res.h1 = x1 * coeff;
  return res;
}

}  // namespace granular

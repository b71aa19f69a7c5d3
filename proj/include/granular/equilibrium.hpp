#pragma once

// Heated inelastic equilibrium F_alpha, the quasi-elastic temperature and the
// balance-equation diagnostic.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "granular/collision.hpp"
#include "granular/lapack.hpp"
#include "granular/linop.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

/// Grid third moment of the unit Maxwellian, integral M_{1,0,1} |v|^3.
inline double maxwellian_third_moment(const GridSpec& grid) {
  const Distribution m = maxwellian(grid, 1.0, {0.0, 0.0, 0.0}, 1.0);
  return integrate(m, [&grid](const Vec& v) { return std::pow(norm2(v, grid.dim), 1.5); });
}

/// T1 = (1/2) d^{2/3} b1^{-2/3} (integral M_{1,0,1} |v|^3)^{-2/3}.
inline double elastic_temperature(const GridSpec& grid, const CrossSection& b, const SphereQuadrature& quad) {
  const double b1 = angular_momentum_b1(b, quad);
  const double m3 = maxwellian_third_moment(grid);
  return 0.5 * std::pow(static_cast<double>(grid.dim), 2.0 / 3.0) * std::pow(b1, -2.0 / 3.0) * std::pow(m3, -2.0 / 3.0);
}

/// Rescales b so that the quasi-elastic temperature is exactly 1 on this grid.
inline CrossSection unit_temperature_cross_section(const GridSpec& grid, const CrossSection& shape,
                                                   const SphereQuadrature& quad) {
  const double t = elastic_temperature(grid, shape, quad);
  CrossSection b = shape.scaled(std::pow(t, 1.5));
  b.name = shape.name + "-unit-temperature";
  return b;
}

inline Distribution elastic_equilibrium(const GridSpec& grid, const CrossSection& b, const SphereQuadrature& quad) {
  return maxwellian(grid, 1.0, {0.0, 0.0, 0.0}, elastic_temperature(grid, b, quad));
}

/// |(1 + alpha) D(F, F) - 2d|.
inline double balance_residual(const Distribution& F, double alpha, const CrossSection& b,
                               const SphereQuadrature& quad) {
  return std::abs((1.0 + alpha) * dissipation(F, F, b, quad) - 2.0 * F.grid.dim);
}

enum class EquilibriumMethod { newton, relaxation };

struct EquilibriumOptions {
  EquilibriumMethod method = EquilibriumMethod::newton;
  double dt = 0.0;  // relaxation step; 0 selects 0.3 / max nu
  double tol = 1e-6;
  long max_iter = 200000;
  int threads = 1;
};

struct EquilibriumResult {
  Distribution profile;
  double residual = 0.0;  // L1 norm of Q(F,F) + (1 - alpha) Laplacian F
  long iterations = 0;
  double balance = 0.0;
  MacroFields macro;
  double clipped_mass = 0.0;
  double leakage = 0.0;
  bool converged = false;
  bool monotonicity_warning = false;
  std::vector<double> history;
  std::string method;
};

inline double l1_norm(const Distribution& f) {
  double s = 0.0;
  for (double x : f.values) s += std::abs(x);
  return s * f.grid.cell_volume();
}

inline Distribution stationary_residual(const CollisionKernel& kernel, const Distribution& f, int threads,
                                        double* leakage = nullptr) {
  auto r = kernel.apply(f, f, threads);
  if (leakage) *leakage = r.leakage;
  Distribution q = r.value();
  const double eps = 1.0 - kernel.alpha();
  if (eps != 0.0) q += eps * laplacian(f);
  return q;
}

/// Shifts f(v) to f(v + u) by multilinear interpolation.
inline Distribution translate(const Distribution& f, const Vec& u) {
  const GridSpec& g = f.grid;
  return Distribution::sample(g, [&](const Vec& v) {
    Vec w = v;
    for (int a = 0; a < g.dim; ++a) w[a] += u[a];
    return interpolate(f, w);
  });
}

namespace detail {

inline double clip_negative(Distribution& f) {
  double clipped = 0.0;
  for (double& x : f.values)
    if (x < 0.0) {
      clipped -= x;
      x = 0.0;
    }
  return clipped * f.grid.cell_volume();
}

inline EquilibriumResult relax(const CollisionKernel& kernel, const CrossSection& b, const SphereQuadrature& quad,
                               Distribution f, const EquilibriumOptions& opt) {
  EquilibriumResult res;
  res.method = "relaxation";
  double dt = opt.dt;
  if (dt <= 0.0) {
    const Distribution nu = loss_potential(f, b, quad);
    double mx = 0.0;
    for (double x : nu.values) mx = std::max(mx, x);
    dt = 0.3 / mx;
  }
  long rising = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (long it = 0; it < opt.max_iter; ++it) {
    const Distribution r = stationary_residual(kernel, f, opt.threads, &res.leakage);
    const double rn = l1_norm(r);
    res.history.push_back(rn);
    res.iterations = it;
    res.residual = rn;
    if (rn <= opt.tol) {
      res.converged = true;
      break;
    }
    rising = rn > prev ? rising + 1 : 0;
    if (rising > 50) res.monotonicity_warning = true;
    prev = rn;
    f += dt * r;
    const MacroFields m = moments(f);
    if (m.velocity) {
      const Vec u = *m.velocity;
      if (norm2(u, f.grid.dim) > 0.0) f = translate(f, u);
    }
    res.clipped_mass += clip_negative(f);
    const double mass = quadrature(f);
    if (!(mass > 0.0) || !f.all_finite()) throw std::runtime_error("relaxation diverged");
    f *= 1.0 / mass;
  }
  res.profile = std::move(f);
  return res;
}

inline EquilibriumResult newton(const CollisionKernel& kernel, Distribution f, const EquilibriumOptions& opt) {
  EquilibriumResult res;
  res.method = "newton";
  const GridSpec& grid = f.grid;
  const int dim = grid.dim;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index rows = n + dim + 1;
  RMatrix cons(dim + 1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec v = grid.node(k);
    cons(0, k) = 1.0;
    for (int a = 0; a < dim; ++a) cons(1 + a, k) = v[a];
  }
  auto constraint_gap = [&](const Distribution& x) {
    Eigen::Map<const RVector> xv(x.values.data(), n);
    RVector c = cons * xv * grid.cell_volume();
    c[0] -= 1.0;
    return c;
  };
  auto merit = [&](const Distribution& r, const Distribution& x) {
    return l1_norm(r) + constraint_gap(x).cwiseAbs().sum();
  };

  Distribution r = stationary_residual(kernel, f, opt.threads, &res.leakage);
  double current = merit(r, f);
  res.history.push_back(l1_norm(r));
  const long max_iter = std::min<long>(opt.max_iter, 60);
  for (long it = 0; it < max_iter; ++it) {
    res.iterations = it;
    res.residual = l1_norm(r);
    if (res.residual <= opt.tol && constraint_gap(f).cwiseAbs().maxCoeff() < 1e-12) {
      res.converged = true;
      break;
    }
    const LinearOperatorMatrix jac = assemble_linearized(kernel, f, opt.threads);
    RMatrix sys(rows, n);
    sys.topRows(n) = jac.real;
    sys.bottomRows(dim + 1) = cons;
    RVector rhs(rows);
    for (Eigen::Index k = 0; k < n; ++k) rhs[k] = -r[k];
    rhs.tail(dim + 1) = -constraint_gap(f) / grid.cell_volume();
    const RVector step = least_squares(std::move(sys), std::move(rhs));
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      Distribution trial = f;
      for (Eigen::Index k = 0; k < n; ++k) trial[k] += t * step[k];
      Distribution rt = stationary_residual(kernel, trial, opt.threads, &res.leakage);
      const double mt = merit(rt, trial);
      if (std::isfinite(mt) && mt < current) {
        f = std::move(trial);
        r = std::move(rt);
        current = mt;
        accepted = true;
        break;
      }
    }
    res.history.push_back(l1_norm(r));
    if (!accepted) break;
  }
  res.residual = l1_norm(r);
  if (!res.converged && res.residual <= opt.tol) res.converged = true;
  res.clipped_mass = detail::clip_negative(f);
  if (res.clipped_mass > 0.0) {
    f *= 1.0 / quadrature(f);
    res.residual = l1_norm(stationary_residual(kernel, f, opt.threads, &res.leakage));
  }
  res.profile = std::move(f);
  return res;
}

}  // namespace detail

/// Stationary solution of Q(F,F) + (1 - alpha) Laplacian F = 0 with unit
/// mass and zero momentum, started from M_{1,0,T1}. alpha = 1 returns that
/// Maxwellian unchanged.
inline EquilibriumResult solve_equilibrium(double alpha, const GridSpec& grid, const CrossSection& b,
                                           const SphereQuadrature& quad, const EquilibriumOptions& opt = {}) {
  CollisionParams params(alpha);
  const double t1 = elastic_temperature(grid, b, quad);
  Distribution f0 = maxwellian(grid, 1.0, {0.0, 0.0, 0.0}, t1);
  CollisionKernel kernel(grid, params.alpha, b, quad);
  EquilibriumResult res;
  if (params.alpha == 1.0) {
    res.profile = f0;
    res.method = "elastic";
    res.converged = true;
    res.residual = l1_norm(stationary_residual(kernel, f0, opt.threads, &res.leakage));
    res.history.push_back(res.residual);
  } else if (opt.method == EquilibriumMethod::newton) {
    res = detail::newton(kernel, std::move(f0), opt);
  } else {
    res = detail::relax(kernel, b, quad, std::move(f0), opt);
  }
  res.macro = moments(res.profile);
  res.balance = balance_residual(res.profile, params.alpha, b, quad);
  return res;
}

}  // namespace granular

#pragma once

// Uniform truncated velocity grid on [-L, L)^d with cell-centred nodes,
// midpoint quadrature and the grid fields used by every other module.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace granular {

using Vec = std::array<double, 3>;  // unused trailing components are zero

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a, int dim) { return dot(a, a, dim); }

/// Geometry of the velocity box. Nodes sit at -L + (i + 1/2) h on every
/// axis, so the node set is exactly centro-symmetric and v = 0 is never a
/// node. Flat indices are row-major with axis 0 the slowest.
struct GridSpec {
  int dim = 2;
  double half_extent = 8.0;
  int points = 32;
  double spacing = 0.5;

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
    return n;
  }

  double coord(int i) const { return -half_extent + (i + 0.5) * spacing; }

  /// Volume element h^d of the midpoint rule.
  double cell_volume() const { return std::pow(spacing, dim); }

  std::array<int, 3> multi_index(std::size_t k) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(k % points);
      k /= points;
    }
    return idx;
  }

  std::size_t flat_index(const std::array<int, 3>& idx) const {
    std::size_t k = 0;
    for (int a = 0; a < dim; ++a) k = k * points + idx[a];
    return k;
  }

  Vec node(std::size_t k) const {
    const auto idx = multi_index(k);
    Vec v{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) v[a] = coord(idx[a]);
    return v;
  }

  /// Flat index of the mirror node -v_k.
  std::size_t mirror(std::size_t k) const {
    auto idx = multi_index(k);
    for (int a = 0; a < dim; ++a) idx[a] = points - 1 - idx[a];
    return flat_index(idx);
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dim == b.dim && a.points == b.points && a.half_extent == b.half_extent;
  }
};

inline GridSpec build_grid(int dim, double half_extent, int points) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("build_grid: dimension must be 2 or 3");
  if (points < 8 || points % 2 != 0)
    throw std::invalid_argument("build_grid: points per axis must be even and >= 8");
  if (!(half_extent > 0.0) || !std::isfinite(half_extent))
    throw std::invalid_argument("build_grid: half extent must be positive");
  GridSpec g;
  g.dim = dim;
  g.half_extent = half_extent;
  g.points = points;
  g.spacing = 2.0 * half_extent / points;
  return g;
}

/// Real field sampled on the grid nodes.
struct Distribution {
  GridSpec grid;
  std::vector<double> values;

  Distribution() = default;
  explicit Distribution(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  Distribution(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("Distribution: size mismatch");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }

  template <class Fn>
  static Distribution sample(const GridSpec& g, Fn&& fn) {
    Distribution d(g);
    for (std::size_t k = 0; k < d.size(); ++k) d.values[k] = fn(g.node(k));
    return d;
  }

  bool all_finite() const {
    for (double x : values)
      if (!std::isfinite(x)) return false;
    return true;
  }

  Distribution& operator+=(const Distribution& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < size(); ++k) values[k] += o.values[k];
    return *this;
  }
  Distribution& operator-=(const Distribution& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < size(); ++k) values[k] -= o.values[k];
    return *this;
  }
  Distribution& operator*=(double c) {
    for (double& x : values) x *= c;
    return *this;
  }
  friend Distribution operator+(Distribution a, const Distribution& b) { return a += b; }
  friend Distribution operator-(Distribution a, const Distribution& b) { return a -= b; }
  friend Distribution operator*(double c, Distribution a) { return a *= c; }
  friend Distribution operator*(Distribution a, double c) { return a *= c; }

  void require_same_grid(const Distribution& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("Distribution: grid mismatch");
  }
};

/// Nodewise product.
inline Distribution hadamard(const Distribution& a, const Distribution& b) {
  a.require_same_grid(b);
  Distribution r(a.grid);
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] * b[k];
  return r;
}

struct MacroFields {
  double mass = 0.0;
  std::optional<Vec> velocity;      // undefined for zero mass
  std::optional<double> temperature;
};

/// Weight m(v) = exp(-a |v|^s) of the exponentially weighted L^1 norm.
struct ExpWeight {
  double amplitude = 0.1;
  double exponent = 0.5;

  ExpWeight() = default;
  ExpWeight(double a, double s) : amplitude(a), exponent(s) {
    if (!(a > 0.0)) throw std::invalid_argument("ExpWeight: amplitude must be positive");
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("ExpWeight: exponent must lie in (0,1)");
  }
};

inline double quadrature(const Distribution& f) {
  double s = 0.0;
  for (double x : f.values) s += x;
  return s * f.grid.cell_volume();
}

/// Quadrature of f * psi(v) for a callable test function.
template <class Fn>
double integrate(const Distribution& f, Fn&& psi) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * psi(f.grid.node(k));
  return s * f.grid.cell_volume();
}

inline Distribution maxwellian(const GridSpec& g, double mass, const Vec& u, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("maxwellian: temperature must be positive");
  if (!(mass > 0.0)) throw std::invalid_argument("maxwellian: mass must be positive");
  const double norm = mass / std::pow(2.0 * std::numbers::pi * temperature, 0.5 * g.dim);
  return Distribution::sample(g, [&](const Vec& v) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += (v[a] - u[a]) * (v[a] - u[a]);
    return norm * std::exp(-r2 / (2.0 * temperature));
  });
}

inline MacroFields moments(const Distribution& f) {
  const GridSpec& g = f.grid;
  MacroFields m;
  m.mass = quadrature(f);
  if (m.mass == 0.0) return m;
  Vec u{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) u[a] = integrate(f, [a](const Vec& v) { return v[a]; }) / m.mass;
  const double e = integrate(f, [&](const Vec& v) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += (v[a] - u[a]) * (v[a] - u[a]);
    return r2;
  });
  m.velocity = u;
  m.temperature = e / (g.dim * m.mass);
  return m;
}

/// Second-order central difference, zero extension outside the box.
inline Distribution laplacian(const Distribution& f) {
  const GridSpec& g = f.grid;
  const int n = g.points;
  const double inv_h2 = 1.0 / (g.spacing * g.spacing);
  Distribution r(g);
  std::size_t stride = 1;
  for (int a = g.dim - 1; a >= 0; --a) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      const int i = static_cast<int>((k / stride) % n);
      const double left = i > 0 ? f[k - stride] : 0.0;
      const double right = i < n - 1 ? f[k + stride] : 0.0;
      r[k] += (left - 2.0 * f[k] + right) * inv_h2;
    }
    stride *= n;
  }
  return r;
}

inline double weighted_norm(const Distribution& f, const ExpWeight& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double r = std::sqrt(norm2(f.grid.node(k), f.grid.dim));
    s += std::abs(f[k]) * std::exp(w.amplitude * std::pow(r, w.exponent));
  }
  return s * f.grid.cell_volume();
}

/// q(h) = integral of h(v) v |v|^2.
inline Vec third_moment_vector(const Distribution& h) {
  Vec q{0.0, 0.0, 0.0};
  const int d = h.grid.dim;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Vec v = h.grid.node(k);
    const double r2 = norm2(v, d);
    for (int a = 0; a < d; ++a) q[a] += h[k] * v[a] * r2;
  }
  for (int a = 0; a < d; ++a) q[a] *= h.grid.cell_volume();
  return q;
}

inline double sphere_area(int dim) {
  return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

}  // namespace granular

#pragma once

// Deterministic quadrature of the inelastic collision operator. The gain part
// is realized by depositing post-collisional pairs back onto the grid with a
// quadratic moment-matching stencil; the loss part uses the same event set so
// that mass, momentum and energy bookkeeping is exact on the grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "granular/parallel.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

/// Angular cross-section b(x), x the cosine between relative velocity and
/// impact direction.
struct CrossSection {
  std::function<double(double)> rule;
  double lower = 1.0;  // b_m
  double upper = 1.0;  // b_M
  std::string name = "constant";
  bool is_constant = true;

  double operator()(double x) const { return rule(x); }

  static CrossSection constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw std::invalid_argument("CrossSection: constant value must be positive");
    CrossSection b;
    b.rule = [value](double) { return value; };
    b.lower = b.upper = value;
    b.name = "constant";
    b.is_constant = true;
    return b;
  }

  /// b(x) = value * (1 + slope * (1 + x)); non-decreasing and convex for slope >= 0.
  static CrossSection affine(double value, double slope) {
    if (!(value > 0.0) || !(slope >= 0.0))
      throw std::invalid_argument("CrossSection: affine needs value > 0 and slope >= 0");
    CrossSection b;
    b.rule = [value, slope](double x) { return value * (1.0 + slope * (1.0 + x)); };
    b.lower = value;
    b.upper = value * (1.0 + 2.0 * slope);
    b.name = "affine";
    b.is_constant = slope == 0.0;
    return b;
  }

  CrossSection scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("CrossSection: scale must be positive");
    CrossSection b = *this;
    auto inner = rule;
    b.rule = [inner, c](double x) { return c * inner(x); };
    b.lower *= c;
    b.upper *= c;
    return b;
  }

  /// Sampled check of positivity bounds, monotonicity and convexity.
  bool satisfies_hypotheses(int samples = 257) const {
    const double tol = 1e-12 * std::max(1.0, upper);
    std::vector<double> y(samples);
    for (int i = 0; i < samples; ++i) {
      const double x = -1.0 + 2.0 * (i + 0.5) / samples;
      y[i] = rule(x);
      if (!(y[i] > 0.0) || y[i] < lower - tol || y[i] > upper + tol) return false;
    }
    for (int i = 1; i < samples; ++i)
      if (y[i] < y[i - 1] - tol) return false;
    for (int i = 1; i + 1 < samples; ++i)
      if (y[i - 1] - 2.0 * y[i] + y[i + 1] < -tol) return false;
    return true;
  }
};

/// Quadrature on the unit sphere S^{d-1}.
struct SphereQuadrature {
  int dim = 2;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  /// d = 2: M equally spaced angles (M divisible by 8 gives an exactly
  /// square-symmetric node set). d = 3: icosahedron plus dodecahedron
  /// vertices, 32 points with equal weights (a spherical 5-design).
  static SphereQuadrature build(int dim, int count) {
    SphereQuadrature q;
    q.dim = dim;
    if (dim == 2) {
      if (count < 4 || count % 2 != 0)
        throw std::invalid_argument("SphereQuadrature: d=2 needs an even count >= 4");
      if (count % 8 == 0) {
        const int k = count / 8;
        std::vector<Vec> quarter;
        for (int m = 0; m < k; ++m) {
          const double t = 2.0 * std::numbers::pi * m / count;
          quarter.push_back({std::cos(t), std::sin(t), 0.0});
        }
        quarter.push_back({std::sqrt(0.5), std::sqrt(0.5), 0.0});
        for (int m = k + 1; m < 2 * k; ++m) {
          const Vec& p = quarter[2 * k - m];
          quarter.push_back({p[1], p[0], 0.0});
        }
        for (int r = 0; r < 4; ++r) {
          for (const Vec& p : quarter) q.nodes.push_back(p);
          for (Vec& p : quarter) p = {-p[1], p[0], 0.0};
        }
      } else {
        for (int m = 0; m < count; ++m) {
          const double t = 2.0 * std::numbers::pi * m / count;
          q.nodes.push_back({std::cos(t), std::sin(t), 0.0});
        }
      }
    } else if (dim == 3) {
      if (count != 32) throw std::invalid_argument("SphereQuadrature: d=3 supports 32 points");
      const double phi = 0.5 * (1.0 + std::sqrt(5.0));
      auto push = [&q](double x, double y, double z) {
        const double r = std::sqrt(x * x + y * y + z * z);
        q.nodes.push_back({x / r, y / r, z / r});
      };
      for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0}) {
          push(0.0, s1, s2 * phi);
          push(s1, s2 * phi, 0.0);
          push(s2 * phi, 0.0, s1);
        }
      for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0})
          for (double s3 : {-1.0, 1.0}) push(s1, s2, s3);
      for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0}) {
          push(0.0, s1 / phi, s2 * phi);
          push(s1 / phi, s2 * phi, 0.0);
          push(s2 * phi, 0.0, s1 / phi);
        }
    } else {
      throw std::invalid_argument("SphereQuadrature: dimension must be 2 or 3");
    }
    q.weights.assign(q.nodes.size(), sphere_area(dim) / static_cast<double>(q.nodes.size()));
    return q;
  }
};

struct CollisionParams {
  double alpha = 1.0;

  CollisionParams() = default;
  explicit CollisionParams(double a) : alpha(a) {
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("CollisionParams: alpha must lie in (0,1]");
  }
  double inelasticity() const { return 1.0 - alpha; }
};

inline std::pair<Vec, Vec> post_collisional(const Vec& v, const Vec& vs, const Vec& omega, double alpha,
                                            int dim) {
  Vec u{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) u[a] = v[a] - vs[a];
  const double s = 0.5 * (1.0 + alpha) * dot(u, omega, dim);
  Vec vp = v, vsp = vs;
  for (int a = 0; a < dim; ++a) {
    vp[a] -= s * omega[a];
    vsp[a] += s * omega[a];
  }
  return {vp, vsp};
}

inline Vec reference_direction(int dim) {
  return dim == 2 ? Vec{1.0, 0.0, 0.0} : Vec{0.0, 0.0, 1.0};
}

/// b1 = (1/4) sum_m w_m (u.w)^2 b(u.w); with this value the energy loss of
/// the weak form is exactly -(1 - alpha^2) D.
inline double angular_momentum_b1(const CrossSection& b, const SphereQuadrature& quad, const Vec& uhat) {
  double s = 0.0;
  for (std::size_t m = 0; m < quad.size(); ++m) {
    const double x = dot(uhat, quad.nodes[m], quad.dim);
    s += quad.weights[m] * x * x * b(x);
  }
  return 0.25 * s;
}

inline double angular_momentum_b1(const CrossSection& b, const SphereQuadrature& quad) {
  return angular_momentum_b1(b, quad, reference_direction(quad.dim));
}

/// sum_m w_m b(u.w): the L1 norm of b on the sphere.
inline double angular_norm(const CrossSection& b, const SphereQuadrature& quad, const Vec& uhat) {
  double s = 0.0;
  for (std::size_t m = 0; m < quad.size(); ++m) s += quad.weights[m] * b(dot(uhat, quad.nodes[m], quad.dim));
  return s;
}

inline double angular_norm(const CrossSection& b, const SphereQuadrature& quad) {
  return angular_norm(b, quad, reference_direction(quad.dim));
}

/// Collision frequency L(g)(v) = |b|_1 * integral |v - v_*| g(v_*).
inline Distribution loss_potential(const Distribution& g, const CrossSection& b, const SphereQuadrature& quad) {
  const GridSpec& grid = g.grid;
  const double bn = angular_norm(b, quad);
  Distribution r(grid);
  const double hd = grid.cell_volume();
  std::vector<Vec> nodes(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) nodes[k] = grid.node(k);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (g[j] == 0.0) continue;
      double u2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) u2 += (nodes[k][a] - nodes[j][a]) * (nodes[k][a] - nodes[j][a]);
      s += std::sqrt(u2) * g[j];
    }
    r[k] = bn * hd * s;
  }
  return r;
}

namespace detail {

/// One-dimensional deposition stencil: weights w[0..len) on nodes base, base+1, ...
struct Stencil1D {
  int base = 0;
  int len = 0;
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};
};

/// Quadratic deposition weights for a point at grid coordinate t: Lagrange
/// weights on three consecutive nodes around the nearest node, so 1, t and
/// t^2 are reproduced exactly. With n > 0 the window is shifted inside
/// [0, n) and the same moments are still reproduced (by extrapolation when
/// t lies outside). Exact ties are resolved by averaging both candidate
/// windows so that the stencil of -t mirrors the stencil of t.
inline Stencil1D quadratic_stencil(double t, int n = 0) {
  Stencil1D st;
  auto window = [&](int centre) {
    int base = centre - 1;
    if (n > 0) base = std::clamp(base, 0, n - 3);
    return base;
  };
  auto lagrange = [&](int base, double scale, int shift) {
    const double x = t - base;
    st.w[shift] += scale * 0.5 * (x - 1.0) * (x - 2.0);
    st.w[shift + 1] += scale * -x * (x - 2.0);
    st.w[shift + 2] += scale * 0.5 * x * (x - 1.0);
  };
  const double fl = std::floor(t);
  if (std::abs(t - fl - 0.5) < 1e-12) {
    const int b0 = window(static_cast<int>(fl)), b1 = window(static_cast<int>(fl) + 1);
    st.base = std::min(b0, b1);
    st.len = std::max(b0, b1) - st.base + 3;
    lagrange(b0, 0.5, b0 - st.base);
    lagrange(b1, 0.5, b1 - st.base);
  } else {
    st.base = window(static_cast<int>(std::lround(t)));
    st.len = 3;
    lagrange(st.base, 1.0, 0);
  }
  // trim exact zeros at the ends (nodes hit exactly)
  while (st.len > 0 && st.w[st.len - 1] == 0.0) --st.len;
  int lead = 0;
  while (lead < st.len && st.w[lead] == 0.0) ++lead;
  if (lead > 0) {
    for (int i = 0; i + lead < 4; ++i) st.w[i] = st.w[i + lead];
    for (int i = 4 - lead; i < 4; ++i) st.w[i] = 0.0;
    st.base += lead;
    st.len -= lead;
  }
  return st;
}

}  // namespace detail

struct CollisionResult {
  Distribution gain;
  Distribution loss;
  double leakage = 0.0;  // weight of events with a post velocity outside the box
  bool truncation_warning = false;

  Distribution value() const { return gain - loss; }
};

/// Precomputed event tables for one (grid, alpha, b, quadrature). The post
/// velocity displacement of a pair depends only on the index difference of
/// the two nodes, so all directions for one difference are merged into one
/// aggregated stencil relative to the first node; the stencil of the partner
/// is its mirror image. Pairs whose stencils would reach outside the box are
/// deposited direction by direction with windows clamped to the box.
class CollisionKernel {
 public:
  CollisionKernel(const GridSpec& grid, double alpha, const CrossSection& b, const SphereQuadrature& quad,
                  double leak_threshold = 1e-8)
      : grid_(grid), alpha_(CollisionParams(alpha).alpha), leak_threshold_(leak_threshold) {
    if (quad.dim != grid.dim) throw std::invalid_argument("CollisionKernel: quadrature dimension mismatch");
    build(b, quad);
  }

  const GridSpec& grid() const { return grid_; }
  double alpha() const { return alpha_; }

  /// Q(f, g): g sits at the loss node, f is the collision partner. Iterates
  /// only over nonzeros of f and g.
  CollisionResult apply(const Distribution& f, const Distribution& g, int threads = 1) const {
    f.require_same_grid(g);
    if (!(f.grid == grid_)) throw std::invalid_argument("CollisionKernel: grid mismatch");
    const std::size_t n = grid_.size();
    std::vector<std::size_t> fj, gk;
    for (std::size_t j = 0; j < n; ++j)
      if (f[j] != 0.0) fj.push_back(j);
    for (std::size_t k = 0; k < n; ++k)
      if (g[k] != 0.0) gk.push_back(k);

    CollisionResult res{Distribution(grid_), Distribution(grid_), 0.0, false};
    if (fj.empty() || gk.empty()) return res;

    const std::size_t blocks = std::min<std::size_t>(gk.size(), threads > 1 ? 64 : 1);
    std::vector<std::vector<double>> gains(blocks);
    std::vector<double> leaks(blocks, 0.0);
    parallel_blocks(blocks, threads, [&](std::size_t blk) {
      auto [lo, hi] = block_range(gk.size(), blocks, blk);
      std::vector<double>& gain = gains[blk];
      gain.assign(n, 0.0);
      double leak = 0.0;
      for (std::size_t p = lo; p < hi; ++p) {
        const std::size_t k = gk[p];
        const double gv = g[k];
        double loss = 0.0;
        for (std::size_t j : fj) leak += accumulate_pair(k, j, f[j] * gv, gain.data(), loss);
        res.loss[k] = loss;  // blocks partition k
      }
      leaks[blk] = leak;
    });
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      for (std::size_t i = 0; i < n; ++i) res.gain[i] += gains[blk][i];
      res.leakage += leaks[blk];
    }
    res.truncation_warning = res.leakage > leak_threshold_;
    return res;
  }

  /// Q(f, g) as a density.
  Distribution collide(const Distribution& f, const Distribution& g, int threads = 1) const {
    return apply(f, g, threads).value();
  }

  /// Accumulates c * (Q(F, e_k) + Q(e_k, F)) into out: one column of the
  /// linearized collision operator.
  void linearized_column(const Distribution& F, std::size_t k, double c, double* out, double& leak) const {
    const std::size_t n = grid_.size();
    double loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (F[j] == 0.0) continue;
      leak += accumulate_pair(k, j, c * F[j], out, loss);
    }
    out[k] -= loss;
    for (std::size_t kk = 0; kk < n; ++kk) {
      if (F[kk] == 0.0) continue;
      double l = 0.0;
      leak += accumulate_pair(kk, k, c * F[kk], out, l);
      out[kk] -= l;
    }
  }

  /// Total event weight sum_m h^d w_m |u| b of the node pair (k, j).
  double event_weight(std::size_t k, std::size_t j) const { return total_[delta_index(k, j)]; }

 private:

  // Deposits pair (k, j) with weight w; returns the weight that left the box.
  double accumulate_pair(std::size_t k, std::size_t j, double w, double* gain, double& loss) const {
    const std::size_t di = delta_index(k, j);
    const double a = total_[di];
    if (a == 0.0) return 0.0;
    loss += w * a;
    const int dim = grid_.dim, n = grid_.points;
    double leak = 0.0;
    for (int side = 0; side < 2; ++side) {
      const std::size_t node = side == 0 ? k : j;
      const int sign = side == 0 ? 1 : -1;
      if (side_fits(node, sign, lo_.data() + di * 3, hi_.data() + di * 3)) {
        const std::int64_t base = static_cast<std::int64_t>(node);
        for (std::uint32_t e = start_[di]; e < start_[di + 1]; ++e) gain[base + sign * offset_[e]] += w * weight_[e];
        continue;
      }
      for (std::size_t m = 0; m < directions_; ++m) {
        const std::size_t em = di * directions_ + m;
        const double x = 0.5 * w * dir_weight_[em];
        if (x == 0.0) continue;
        const DirStencil& st = dir_stencil_[em];
        std::array<detail::Stencil1D, 3> abs_st;
        bool outside = false;
        for (int ax = 0; ax < dim; ++ax) {
          const int i0 = axis_index_[node * 3 + ax];
          const detail::Stencil1D& rel = st.axis[ax];
          const int a0 = sign > 0 ? i0 + rel.base : i0 - rel.base - rel.len + 1;
          if (a0 >= 0 && a0 + rel.len - 1 <= n - 1) {
            abs_st[ax].base = a0;
            abs_st[ax].len = rel.len;
            for (int i = 0; i < rel.len; ++i) abs_st[ax].w[sign > 0 ? i : rel.len - 1 - i] = rel.w[i];
          } else {
            const double t = i0 + sign * disp_[em * 3 + ax];
            outside = outside || t < -0.5 || t > n - 0.5;
            abs_st[ax] = detail::quadratic_stencil(t, n);
          }
        }
        if (outside) leak += std::abs(x);
        deposit(abs_st, x, gain);
      }
    }
    return leak;
  }

  struct DirStencil {
    std::array<detail::Stencil1D, 3> axis;
  };

  bool side_fits(std::size_t node, int sign, const int* lo, const int* hi) const {
    const int n = grid_.points;
    for (int a = 0; a < grid_.dim; ++a) {
      const int i = axis_index_[node * 3 + a];
      const int l = sign > 0 ? i + lo[a] : i - hi[a];
      const int h = sign > 0 ? i + hi[a] : i - lo[a];
      if (l < 0 || h > n - 1) return false;
    }
    return true;
  }

  void deposit(const std::array<detail::Stencil1D, 3>& st, double x, double* gain) const {
    const std::int64_t n = grid_.points;
    if (grid_.dim == 2) {
      for (int a = 0; a < st[0].len; ++a) {
        const double xa = x * st[0].w[a];
        const std::int64_t ra = (st[0].base + a) * n + st[1].base;
        for (int b = 0; b < st[1].len; ++b) gain[ra + b] += xa * st[1].w[b];
      }
    } else {
      for (int a = 0; a < st[0].len; ++a)
        for (int b = 0; b < st[1].len; ++b) {
          const double xab = x * st[0].w[a] * st[1].w[b];
          const std::int64_t rab = ((st[0].base + a) * n + st[1].base + b) * n + st[2].base;
          for (int c = 0; c < st[2].len; ++c) gain[rab + c] += xab * st[2].w[c];
        }
    }
  }

  std::size_t delta_index(std::size_t k, std::size_t j) const {
    const int n = grid_.points;
    const int span = 2 * n - 1;
    std::size_t di = 0;
    for (int a = 0; a < grid_.dim; ++a) {
      const int d = axis_index_[k * 3 + a] - axis_index_[j * 3 + a] + n - 1;
      di = di * span + d;
    }
    return di;
  }

  void build(const CrossSection& b, const SphereQuadrature& quad) {
    const int n = grid_.points, dim = grid_.dim;
    const int span = 2 * n - 1;
    const std::size_t nodes = grid_.size();
    directions_ = quad.size();
    axis_index_.assign(nodes * 3, 0);
    for (std::size_t k = 0; k < nodes; ++k) {
      const auto idx = grid_.multi_index(k);
      for (int a = 0; a < dim; ++a) axis_index_[k * 3 + a] = idx[a];
    }
    std::array<std::int64_t, 3> stride{0, 0, 0};
    {
      std::int64_t s = 1;
      for (int a = dim - 1; a >= 0; --a) {
        stride[a] = s;
        s *= n;
      }
    }
    std::size_t deltas = 1;
    for (int a = 0; a < dim; ++a) deltas *= static_cast<std::size_t>(span);
    total_.assign(deltas, 0.0);
    lo_.assign(deltas * 3, 0);
    hi_.assign(deltas * 3, 0);
    start_.assign(deltas + 1, 0);
    dir_weight_.assign(deltas * directions_, 0.0);
    disp_.assign(deltas * directions_ * 3, 0.0);
    dir_stencil_.assign(deltas * directions_, DirStencil{});
    const double hd = grid_.cell_volume();
    const double c = 0.5 * (1.0 + alpha_);

    std::vector<std::pair<std::int64_t, double>> acc;
    for (std::size_t di = 0; di < deltas; ++di) {
      start_[di] = static_cast<std::uint32_t>(offset_.size());
      std::array<int, 3> dl{0, 0, 0};
      {
        std::size_t r = di;
        for (int a = dim - 1; a >= 0; --a) {
          dl[a] = static_cast<int>(r % span) - (n - 1);
          r /= span;
        }
      }
      double du2 = 0.0;
      for (int a = 0; a < dim; ++a) du2 += double(dl[a]) * dl[a];
      if (du2 == 0.0) continue;
      const double du = std::sqrt(du2);
      const double umod = grid_.spacing * du;
      acc.clear();
      int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
      double total = 0.0;
      for (std::size_t m = 0; m < directions_; ++m) {
        const Vec& om = quad.nodes[m];
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += dl[a] * om[a];
        const double weight = hd * quad.weights[m] * umod * b(s / du);
        total += weight;
        const std::size_t em = di * directions_ + m;
        dir_weight_[em] = weight;
        DirStencil& ds = dir_stencil_[em];
        for (int a = 0; a < dim; ++a) {
          const double t = -c * s * om[a];
          disp_[em * 3 + a] = t;
          ds.axis[a] = detail::quadratic_stencil(t);
          lo[a] = std::min(lo[a], ds.axis[a].base);
          hi[a] = std::max(hi[a], ds.axis[a].base + ds.axis[a].len - 1);
        }
        tensor_accumulate(ds, dim, stride, 0.5 * weight, acc);
      }
      total_[di] = total;
      for (int a = 0; a < dim; ++a) {
        lo_[di * 3 + a] = lo[a];
        hi_[di * 3 + a] = hi[a];
      }
      std::sort(acc.begin(), acc.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
      for (std::size_t i = 0; i < acc.size();) {
        const std::int64_t o = acc[i].first;
        double w = 0.0;
        for (; i < acc.size() && acc[i].first == o; ++i) w += acc[i].second;
        if (w != 0.0) {
          offset_.push_back(o);
          weight_.push_back(w);
        }
      }
    }
    start_[deltas] = static_cast<std::uint32_t>(offset_.size());
  }

  static void tensor_accumulate(const DirStencil& ds, int dim, const std::array<std::int64_t, 3>& stride,
                                double scale, std::vector<std::pair<std::int64_t, double>>& acc) {
    const auto& st = ds.axis;
    if (dim == 2) {
      for (int a = 0; a < st[0].len; ++a)
        for (int b = 0; b < st[1].len; ++b)
          acc.emplace_back((st[0].base + a) * stride[0] + (st[1].base + b) * stride[1],
                           scale * st[0].w[a] * st[1].w[b]);
    } else {
      for (int a = 0; a < st[0].len; ++a)
        for (int b = 0; b < st[1].len; ++b)
          for (int c = 0; c < st[2].len; ++c)
            acc.emplace_back((st[0].base + a) * stride[0] + (st[1].base + b) * stride[1] +
                                 (st[2].base + c) * stride[2],
                             scale * st[0].w[a] * st[1].w[b] * st[2].w[c]);
    }
  }

  GridSpec grid_;
  double alpha_;
  double leak_threshold_;
  std::size_t directions_ = 0;
  std::vector<int> axis_index_;
  std::vector<double> total_;
  std::vector<int> lo_, hi_;
  std::vector<std::uint32_t> start_;
  std::vector<std::int64_t> offset_;
  std::vector<double> weight_;
  std::vector<double> dir_weight_;
  std::vector<double> disp_;
  std::vector<DirStencil> dir_stencil_;
};

inline Distribution gain_apply(const Distribution& f, const Distribution& g, double alpha, const CrossSection& b,
                               const SphereQuadrature& quad, double* leakage = nullptr) {
  CollisionKernel kernel(f.grid, alpha, b, quad);
  auto r = kernel.apply(f, g);
  if (leakage) *leakage = r.leakage;
  return r.gain;
}

inline Distribution collision_apply(const Distribution& f, const Distribution& g, double alpha,
                                    const CrossSection& b, const SphereQuadrature& quad, double* leakage = nullptr) {
  CollisionKernel kernel(f.grid, alpha, b, quad);
  auto r = kernel.apply(f, g);
  if (leakage) *leakage = r.leakage;
  return r.value();
}

/// D(f, g) = b1 * integral integral f g_* |v - v_*|^3.
inline double dissipation(const Distribution& f, const Distribution& g, const CrossSection& b,
                          const SphereQuadrature& quad) {
  f.require_same_grid(g);
  const GridSpec& grid = f.grid;
  const double b1 = angular_momentum_b1(b, quad);
  std::vector<Vec> nodes(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) nodes[k] = grid.node(k);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (f[k] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double u2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) u2 += (nodes[k][a] - nodes[j][a]) * (nodes[k][a] - nodes[j][a]);
      inner += g[j] * u2 * std::sqrt(u2);
    }
    s += f[k] * inner;
  }
  const double hd = grid.cell_volume();
  return b1 * hd * hd * s;
}

/// Multilinear interpolation of node values, linearly extrapolated outside
/// the node hull.
inline double interpolate(const Distribution& psi, const Vec& v) {
  const GridSpec& g = psi.grid;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    const double t = (v[a] + g.half_extent) / g.spacing - 0.5;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, g.points - 2);
    base[a] = i;
    frac[a] = t - i;
  }
  double s = 0.0;
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<int, 3> idx = base;
    for (int a = 0; a < g.dim; ++a) {
      const bool up = (c >> a) & 1;
      idx[a] += up ? 1 : 0;
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    s += w * psi[g.flat_index(idx)];
  }
  return s;
}

/// Weak form evaluated event by event with psi given as a callable; no
/// deposition involved.
template <class Fn>
double weak_probe(const Distribution& f, const Distribution& g, Fn&& psi, double alpha, const CrossSection& b,
                  const SphereQuadrature& quad) {
  f.require_same_grid(g);
  const GridSpec& grid = f.grid;
  const int dim = grid.dim;
  std::vector<Vec> nodes(grid.size());
  std::vector<double> pv(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    nodes[k] = grid.node(k);
    pv[k] = psi(nodes[k]);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (g[k] == 0.0) continue;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (f[j] == 0.0 || j == k) continue;
      Vec u{0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) u[a] = nodes[k][a] - nodes[j][a];
      const double um = std::sqrt(norm2(u, dim));
      double inner = 0.0;
      for (std::size_t m = 0; m < quad.size(); ++m) {
        const Vec& om = quad.nodes[m];
        const double x = dot(u, om, dim) / um;
        auto [vp, vsp] = post_collisional(nodes[k], nodes[j], om, alpha, dim);
        inner += quad.weights[m] * b(x) * (psi(vp) + psi(vsp) - pv[k] - pv[j]);
      }
      s += f[j] * g[k] * um * inner;
    }
  }
  const double hd = grid.cell_volume();
  return 0.5 * hd * hd * s;
}

inline double weak_probe(const Distribution& f, const Distribution& g, const Distribution& psi, double alpha,
                         const CrossSection& b, const SphereQuadrature& quad) {
  return weak_probe(f, g, [&psi](const Vec& v) { return interpolate(psi, v); }, alpha, b, quad);
}

}  // namespace granular

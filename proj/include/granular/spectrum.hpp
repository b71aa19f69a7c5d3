#pragma once

// Eigen-decomposition of L_{alpha,gamma}, hydrodynamic branch selection and
// continuation in rho, and extraction of the expansion coefficients.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "granular/lapack.hpp"
#include "granular/linop.hpp"
#include "granular/parallel.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

struct EigenPair {
  cplx value;
  CVector vector;  // empty when only values were requested
  double residual = 0.0;
};

struct SpectrumSummary {
  double rho = 0.0;
  double alpha = 1.0;
  std::vector<EigenPair> hydro;  // d + 2 eigenvalues of largest real part
  double gap = 0.0;              // distance from 0 to the real part of the rest
  double essential = 0.0;        // max real part among the rest
  double separation = 0.0;       // min Re(hydro) - essential
  bool separated = false;
  double max_residual = 0.0;
};

/// Unit quadrature L2 norm; phase fixed so the largest-modulus entry is real positive.
inline void normalize_eigenvector(CVector& x, double cell_volume) {
  const double nrm = std::sqrt(x.squaredNorm() * cell_volume);
  if (nrm == 0.0) return;
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  const cplx phase = std::conj(x[imax]) / std::abs(x[imax]);
  x *= phase / nrm;
}

inline double eigen_residual(const CMatrix& a, const CVector& x, cplx lambda) {
  return (a * x - lambda * x).norm() / x.norm();
}

/// All eigenpairs of a dense operator, residuals included.
inline std::vector<EigenPair> full_spectrum(const LinearOperatorMatrix& a, bool vectors = true) {
  const CMatrix m = a.is_complex() ? a.complex : CMatrix(a.real.cast<cplx>());
  EigenDecomposition ed = a.is_complex() ? eig(a.complex, vectors) : eig(a.real, vectors);
  std::vector<EigenPair> out(ed.values.size());
  CMatrix resid;
  if (vectors) resid = m * ed.vectors - ed.vectors * ed.values.asDiagonal();
  for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
    out[i].value = ed.values[i];
    if (vectors) {
      out[i].residual = resid.col(i).norm() / ed.vectors.col(i).norm();
      out[i].vector = ed.vectors.col(i);
      normalize_eigenvector(out[i].vector, a.grid.cell_volume());
    }
  }
  return out;
}

/// Eigen-solver for the family A0 - i rho diag(omega . v). When omega is a
/// coordinate axis, the grid reflection P along it satisfies P A0 P = A0 and
/// P V P = -V, so the real matrix A0 + rho V P is similar to the complex one
/// and the real Hessenberg QR can be used.
class FourierSolver {
 public:
  FourierSolver(const LinearOperatorMatrix& a0, const Vec& omega) : grid_(a0.grid), alpha_(a0.alpha) {
    if (a0.is_complex()) throw std::invalid_argument("FourierSolver: expects the real operator");
    const double on = std::sqrt(norm2(omega, grid_.dim));
    if (!(on > 0.0)) throw std::invalid_argument("FourierSolver: direction must be nonzero");
    for (int a = 0; a < grid_.dim; ++a) omega_[a] = omega[a] / on;
    a0_ = a0.real;
    v_ = velocity_projection(grid_, omega_);
    axis_ = -1;
    for (int a = 0; a < grid_.dim; ++a)
      if (std::abs(std::abs(omega_[a]) - 1.0) < 1e-14) axis_ = a;
    if (axis_ >= 0) {
      perm_.resize(grid_.size());
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        auto idx = grid_.multi_index(k);
        idx[axis_] = grid_.points - 1 - idx[axis_];
        perm_[k] = grid_.flat_index(idx);
      }
      RMatrix pap(a0_.rows(), a0_.cols());
      for (Eigen::Index j = 0; j < a0_.cols(); ++j)
        for (Eigen::Index i = 0; i < a0_.rows(); ++i) pap(i, j) = a0_(perm_[i], perm_[j]);
      const double scale = a0_.cwiseAbs().maxCoeff();
      defect_ = (pap - a0_).cwiseAbs().maxCoeff() / scale;
      if (defect_ < 1e-10) {
        a0_ = 0.5 * (a0_ + pap);
      } else {
        axis_ = -1;
      }
    }
  }

  const GridSpec& grid() const { return grid_; }
  double alpha() const { return alpha_; }
  const Vec& omega() const { return omega_; }
  bool reflected() const { return axis_ >= 0; }
  double reflection_defect() const { return defect_; }
  const RMatrix& base() const { return a0_; }

  CMatrix matrix(double rho) const {
    CMatrix m = a0_.cast<cplx>();
    for (Eigen::Index k = 0; k < v_.size(); ++k) m(k, k) -= cplx(0.0, rho * v_[k]);
    return m;
  }

  /// (A0 - i rho V) x without forming the complex matrix.
  CVector apply(double rho, const CVector& x) const {
    CVector y(x.size());
    y.real() = a0_ * x.real();
    y.imag() = a0_ * x.imag();
    for (Eigen::Index k = 0; k < x.size(); ++k) y[k] -= cplx(0.0, rho * v_[k]) * x[k];
    return y;
  }

  /// Eigen-decomposition at frequency rho. `general` forces the complex route.
  EigenDecomposition decompose(double rho, bool vectors, bool general = false) const {
    if (rho == 0.0 && !general) return eig(a0_, vectors);
    if (!reflected() || general) return eig(matrix(rho), vectors);
    RMatrix t = a0_;
    for (Eigen::Index k = 0; k < v_.size(); ++k) t(k, static_cast<Eigen::Index>(perm_[k])) += rho * v_[k];
    EigenDecomposition ed = eig(std::move(t), vectors);
    if (vectors) {
      // x = (I + iP) y
      CMatrix x(ed.vectors.rows(), ed.vectors.cols());
      for (Eigen::Index k = 0; k < x.rows(); ++k)
        x.row(k) = ed.vectors.row(k) + cplx(0.0, 1.0) * ed.vectors.row(static_cast<Eigen::Index>(perm_[k]));
      ed.vectors = std::move(x);
    }
    return ed;
  }

  /// Hydrodynamic set plus spectral diagnostics at frequency rho.
  SpectrumSummary summary(double rho, bool vectors, bool general = false) const {
    const EigenDecomposition ed = decompose(rho, vectors, general);
    return summarize(ed, rho, vectors);
  }

  SpectrumSummary summarize(const EigenDecomposition& ed, double rho, bool vectors) const {
    const std::size_t count = static_cast<std::size_t>(grid_.dim) + 2;
    std::vector<Eigen::Index> order(ed.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return ed.values[a].real() > ed.values[b].real();
    });
    SpectrumSummary s;
    s.rho = rho;
    s.alpha = alpha_;
    for (std::size_t i = 0; i < count && i < order.size(); ++i) {
      EigenPair p;
      p.value = ed.values[order[i]];
      if (vectors) {
        p.vector = ed.vectors.col(order[i]);
        normalize_eigenvector(p.vector, grid_.cell_volume());
        p.residual = (apply(rho, p.vector) - p.value * p.vector).norm() / p.vector.norm();
        s.max_residual = std::max(s.max_residual, p.residual);
      }
      s.hydro.push_back(std::move(p));
    }
    if (order.size() > count) {
      s.essential = ed.values[order[count]].real();
      s.gap = -s.essential;
      double min_hydro = s.hydro.front().value.real();
      for (const auto& p : s.hydro) min_hydro = std::min(min_hydro, p.value.real());
      s.separation = min_hydro - s.essential;
      s.separated = s.gap > 0.0 && s.separation >= 0.5 * s.gap;
    }
    return s;
  }

 private:
  GridSpec grid_;
  double alpha_;
  Vec omega_{0.0, 0.0, 0.0};
  RMatrix a0_;
  RVector v_;
  int axis_ = -1;
  std::vector<std::size_t> perm_;
  double defect_ = 0.0;
};

/// Selects the d + 2 eigenvalues of largest real part from a list of pairs.
inline SpectrumSummary hydrodynamic_set(const std::vector<EigenPair>& pairs, int dim) {
  const std::size_t count = static_cast<std::size_t>(dim) + 2;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs[a].value.real() > pairs[b].value.real(); });
  SpectrumSummary s;
  for (std::size_t i = 0; i < count && i < order.size(); ++i) {
    s.hydro.push_back(pairs[order[i]]);
    s.max_residual = std::max(s.max_residual, pairs[order[i]].residual);
  }
  if (order.size() > count) {
    s.essential = pairs[order[count]].value.real();
    s.gap = -s.essential;
    double min_hydro = s.hydro.front().value.real();
    for (const auto& p : s.hydro) min_hydro = std::min(min_hydro, p.value.real());
    s.separation = min_hydro - s.essential;
    s.separated = s.gap > 0.0 && s.separation >= 0.5 * s.gap;
  }
  return s;
}

struct BranchSample {
  double rho = 0.0;
  double alpha = 1.0;
  cplx lambda;
  CVector vector;
  double residual = 0.0;
};

struct Branch {
  int label = 0;  // -1, +1 acoustic; 0 longitudinal real; 2..d transverse
  Vec omega{0.0, 0.0, 0.0};
  std::vector<BranchSample> samples;
  bool failed = false;
  std::string failure;

  const BranchSample* at(double rho, double alpha, double tol = 1e-14) const {
    for (const auto& s : samples)
      if (std::abs(s.rho - rho) <= tol && std::abs(s.alpha - alpha) <= tol) return &s;
    return nullptr;
  }
};

inline double overlap(const CVector& a, const CVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(a.dot(b)) / (na * nb);
}

namespace detail {

/// Quadrature pairing of a complex field with a real test function.
template <class Fn>
cplx moment(const GridSpec& g, const CVector& x, Fn&& psi) {
  cplx s = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) s += x[k] * psi(g.node(k));
  return s * g.cell_volume();
}

/// Size of the momentum content of x orthogonal to omega.
inline double transverse_content(const GridSpec& g, const CVector& x, const Vec& omega) {
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    const cplx m = moment(g, x, [&](const Vec& v) {
      const double vo = dot(v, omega, g.dim);
      return v[a] - vo * omega[a];
    });
    s += std::norm(m);
  }
  return std::sqrt(s);
}

inline double longitudinal_content(const GridSpec& g, const CVector& x, const Vec& omega) {
  const cplx m0 = moment(g, x, [](const Vec&) { return 1.0; });
  const cplx m1 = moment(g, x, [&](const Vec& v) { return dot(v, omega, g.dim); });
  const cplx m2 = moment(g, x, [&](const Vec& v) { return norm2(v, g.dim); });
  return std::sqrt(std::norm(m0) + std::norm(m1) + std::norm(m2));
}

}  // namespace detail

/// Assigns labels to a hydrodynamic set away from rho = 0: the two members
/// with the largest |Im| are acoustic (sign of Im), the d - 1 with the most
/// transverse momentum are shear, the remaining one is the longitudinal real
/// branch. Returns labels aligned with set.hydro.
inline std::vector<int> label_hydrodynamic(const SpectrumSummary& set, const GridSpec& g, const Vec& omega) {
  const std::size_t n = set.hydro.size();
  std::vector<int> labels(n, 0);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(set.hydro[a].value.imag()) > std::abs(set.hydro[b].value.imag());
  });
  std::vector<bool> used(n, false);
  // acoustic pair
  for (int i = 0; i < 2 && i < static_cast<int>(n); ++i) {
    const std::size_t k = idx[i];
    used[k] = true;
    labels[k] = set.hydro[k].value.imag() >= 0.0 ? 1 : -1;
  }
  if (n >= 2 && labels[idx[0]] == labels[idx[1]]) labels[idx[1]] = -labels[idx[0]];
  std::vector<std::pair<double, std::size_t>> trans;
  for (std::size_t k = 0; k < n; ++k) {
    if (used[k]) continue;
    const CVector& x = set.hydro[k].vector;
    double score = 0.0;
    if (x.size() > 0) {
      const double t = detail::transverse_content(g, x, omega);
      const double l = detail::longitudinal_content(g, x, omega);
      score = t / (t + l + 1e-300);
    }
    trans.emplace_back(score, k);
  }
  std::stable_sort(trans.begin(), trans.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  int next = 2;
  for (std::size_t i = 0; i < trans.size(); ++i) labels[trans[i].second] = i + 1 < trans.size() ? next++ : 0;
  return labels;
}

/// Best one-to-one assignment of new pairs to existing branches by summed
/// overlap; exhaustive over permutations (at most 5! candidates).
inline std::vector<std::size_t> match_by_overlap(const std::vector<CVector>& previous,
                                                 const std::vector<cplx>& previous_values,
                                                 const SpectrumSummary& current, std::vector<double>& overlaps) {
  const std::size_t n = previous.size();
  std::vector<std::vector<double>> ov(n, std::vector<double>(current.hydro.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < current.hydro.size(); ++j) ov[i][j] = overlap(previous[i], current.hydro[j].vector);
  std::vector<std::size_t> perm(current.hydro.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_score = -1.0, best_dist = 0.0;
  do {
    double score = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      score += ov[i][perm[i]];
      dist += std::abs(previous_values[i] - current.hydro[perm[i]].value);
    }
    if (score > best_score + 1e-9 || (std::abs(score - best_score) <= 1e-9 && dist < best_dist)) {
      best_score = score;
      best_dist = dist;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  overlaps.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) overlaps[i] = ov[i][best[i]];
  best.resize(n);
  return best;
}

struct TrackOptions {
  double overlap_threshold = 0.7;
  int threads = 1;
};

/// Continuation of the d + 2 hydrodynamic branches over an ascending list of
/// nonnegative frequencies. Labels are fixed at the first nonzero rho; the
/// rho = 0 sample is attached afterwards by nearest eigenvalue.
inline std::vector<Branch> track_branches(const FourierSolver& solver, const std::vector<double>& rhos,
                                          const TrackOptions& opt = {}) {
  if (rhos.empty()) throw std::invalid_argument("track_branches: empty frequency list");
  for (std::size_t i = 1; i < rhos.size(); ++i)
    if (!(rhos[i] > rhos[i - 1])) throw std::invalid_argument("track_branches: frequencies must be ascending");
  if (rhos.front() < 0.0) throw std::invalid_argument("track_branches: frequencies must be nonnegative");
  const GridSpec& g = solver.grid();
  std::vector<SpectrumSummary> sums(rhos.size());
  parallel_blocks(rhos.size(), opt.threads, [&](std::size_t i) { sums[i] = solver.summary(rhos[i], true); });

  std::size_t first = rhos.front() == 0.0 ? 1 : 0;
  const std::size_t count = static_cast<std::size_t>(g.dim) + 2;
  std::vector<Branch> branches(count);
  if (first >= rhos.size()) {
    // only rho = 0 requested: no labels can be assigned, keep order
    for (std::size_t b = 0; b < count; ++b) {
      branches[b].label = static_cast<int>(b);
      branches[b].omega = solver.omega();
      const auto& p = sums[0].hydro[b];
      branches[b].samples.push_back({0.0, solver.alpha(), p.value, p.vector, p.residual});
    }
    return branches;
  }
  const std::vector<int> labels = label_hydrodynamic(sums[first], g, solver.omega());
  for (std::size_t b = 0; b < count; ++b) {
    branches[b].label = labels[b];
    branches[b].omega = solver.omega();
    const auto& p = sums[first].hydro[b];
    branches[b].samples.push_back({rhos[first], solver.alpha(), p.value, p.vector, p.residual});
  }
  for (std::size_t i = first + 1; i < rhos.size(); ++i) {
    std::vector<CVector> prev;
    std::vector<cplx> prev_values;
    for (const auto& br : branches) {
      prev.push_back(br.samples.back().vector);
      prev_values.push_back(br.samples.back().lambda);
    }
    std::vector<double> ov;
    const auto assign = match_by_overlap(prev, prev_values, sums[i], ov);
    for (std::size_t b = 0; b < count; ++b) {
      if (branches[b].failed) continue;
      if (ov[b] < opt.overlap_threshold) {
        branches[b].failed = true;
        branches[b].failure = "overlap " + std::to_string(ov[b]) + " below threshold at rho=" + std::to_string(rhos[i]);
        continue;
      }
      const auto& p = sums[i].hydro[assign[b]];
      branches[b].samples.push_back({rhos[i], solver.alpha(), p.value, p.vector, p.residual});
    }
  }
  if (first == 1) {
    // attach rho = 0 by nearest eigenvalue to the first tracked value
    std::vector<bool> taken(count, false);
    for (auto& br : branches) {
      const cplx target = br.samples.front().lambda;
      std::size_t best = 0;
      double bd = 1e300;
      for (std::size_t j = 0; j < count; ++j) {
        if (taken[j]) continue;
        const double dist = std::abs(sums[0].hydro[j].value - target);
        if (dist < bd) {
          bd = dist;
          best = j;
        }
      }
      taken[best] = true;
      const auto& p = sums[0].hydro[best];
      br.samples.insert(br.samples.begin(), {0.0, solver.alpha(), p.value, p.vector, p.residual});
    }
  }
  std::stable_sort(branches.begin(), branches.end(), [](const Branch& a, const Branch& b) { return a.label < b.label; });
  return branches;
}

struct ExpansionFit {
  int label = 0;
  cplx lambda0;
  cplx lambda1;  // d lambda / d rho at rho = 0
  cplx lambda2;  // -(1/2) d^2 lambda / d rho^2 at rho = 0
  double e1 = 0.0;
  bool has_e1 = false;
  double lambda1_richardson_change = 0.0;  // |refined - plain| first difference
  double lambda2_richardson_change = 0.0;
  double e1_fit_residual = 0.0;
};

/// Samples needed for one branch: lambda at 0, +-rho0, +-2 rho0.
struct CentredSamples {
  double rho0 = 0.0;
  cplx at0;
  cplx plus1, minus1, plus2, minus2;
};

/// Finite-difference coefficients with one Richardson step.
inline ExpansionFit fit_expansion(int label, const CentredSamples& s) {
  if (!(s.rho0 > 0.0)) throw std::invalid_argument("fit_expansion: rho0 must be positive");
  ExpansionFit fit;
  fit.label = label;
  fit.lambda0 = s.at0;
  const double h = s.rho0;
  const cplx d1h = (s.plus1 - s.minus1) / (2.0 * h);
  const cplx d1H = (s.plus2 - s.minus2) / (4.0 * h);
  fit.lambda1 = (4.0 * d1h - d1H) / 3.0;
  fit.lambda1_richardson_change = std::abs(fit.lambda1 - d1h);
  const cplx d2h = (s.plus1 - 2.0 * s.at0 + s.minus1) / (h * h);
  const cplx d2H = (s.plus2 - 2.0 * s.at0 + s.minus2) / (4.0 * h * h);
  const cplx d2 = (4.0 * d2h - d2H) / 3.0;
  fit.lambda2 = -0.5 * d2;
  fit.lambda2_richardson_change = std::abs(fit.lambda2 + 0.5 * d2h);
  return fit;
}

/// e1 from a least-squares line lambda(0, alpha) = a - e1 (1 - alpha).
inline double fit_energy_slope(const std::vector<double>& alphas, const std::vector<double>& values,
                               double* residual = nullptr) {
  if (alphas.size() != values.size() || alphas.size() < 2)
    throw std::invalid_argument("fit_energy_slope: need at least two samples");
  const std::size_t n = alphas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 1.0 - alphas[i];
    sx += x;
    sy += values[i];
    sxx += x * x;
    sxy += x * values[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_energy_slope: degenerate inelasticities");
  const double slope = (n * sxy - sx * sy) / den;
  const double icpt = (sy - slope * sx) / n;
  if (residual) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = values[i] - icpt - slope * (1.0 - alphas[i]);
      r += e * e;
    }
    *residual = std::sqrt(r / n);
  }
  return -slope;
}

/// Branch fits at one alpha from samples at 0, rho0, 2 rho0 (real route) and
/// -rho0, -2 rho0 (general complex route).
struct BranchFitReport {
  std::vector<Branch> branches;
  std::vector<ExpansionFit> fits;  // aligned with branches
  std::vector<SpectrumSummary> negative;
  double symmetry_deviation = 0.0;  // max |lambda(-rho) - conj lambda(rho)|
  double symmetry_scale = 1.0;
  double max_residual = 0.0;
};

inline BranchFitReport fit_branches(const FourierSolver& solver, double rho0, const TrackOptions& opt = {}) {
  if (!(rho0 > 0.0)) throw std::invalid_argument("fit_branches: rho0 must be positive");
  BranchFitReport r;
  r.branches = track_branches(solver, {0.0, rho0, 2.0 * rho0}, opt);
  r.negative.resize(2);
  parallel_blocks(2, opt.threads, [&](std::size_t i) { r.negative[i] = solver.summary(-(i + 1.0) * rho0, false, true); });
  auto nearest = [](const SpectrumSummary& s, cplx target) {
    cplx best = s.hydro.front().value;
    for (const auto& p : s.hydro)
      if (std::abs(p.value - target) < std::abs(best - target)) best = p.value;
    return best;
  };
  for (const auto& br : r.branches) {
    if (br.failed || br.samples.size() < 3) throw std::runtime_error("fit_branches: branch tracking failed: " + br.failure);
    CentredSamples cs;
    cs.rho0 = rho0;
    cs.at0 = br.samples[0].lambda;
    cs.plus1 = br.samples[1].lambda;
    cs.plus2 = br.samples[2].lambda;
    cs.minus1 = nearest(r.negative[0], std::conj(cs.plus1));
    cs.minus2 = nearest(r.negative[1], std::conj(cs.plus2));
    r.symmetry_deviation = std::max({r.symmetry_deviation, std::abs(cs.minus1 - std::conj(cs.plus1)),
                                     std::abs(cs.minus2 - std::conj(cs.plus2))});
    r.symmetry_scale = std::max({r.symmetry_scale, std::abs(cs.plus1), std::abs(cs.plus2)});
    for (const auto& s : br.samples) r.max_residual = std::max(r.max_residual, s.residual);
    r.fits.push_back(fit_expansion(br.label, cs));
  }
  return r;
}

struct EssentialReport {
  double bound = 0.0;  // c with max essential real part <= -c
  double nu0 = 0.0;
  double ratio = 0.0;  // c / nu0
  bool below_zero = false;
  bool tracks_nu0 = false;
  double max_hydro_real = -1e300;
  bool hydro_clear = true;  // no non-hydrodynamic real part above -gap/2
};

/// Uniform half-plane bound of the non-hydrodynamic spectrum over a sweep.
inline EssentialReport essential_bound_check(const std::vector<SpectrumSummary>& sweep, double nu0,
                                             double reference_gap) {
  EssentialReport r;
  r.nu0 = nu0;
  double worst = -1e300;
  for (const auto& s : sweep) {
    worst = std::max(worst, s.essential);
    for (const auto& p : s.hydro) r.max_hydro_real = std::max(r.max_hydro_real, p.value.real());
    if (s.essential > -0.5 * reference_gap) r.hydro_clear = false;
  }
  r.bound = -worst;
  r.below_zero = r.bound > 0.0;
  r.ratio = nu0 > 0.0 ? r.bound / nu0 : 0.0;
  r.tracks_nu0 = r.ratio >= 0.25 && r.ratio <= 4.0;
  return r;
}

/// Largest nu0 with nu(v) >= nu0 (1 + |v|) on every node.
inline double collision_frequency_floor(const Distribution& nu) {
  double m = 1e300;
  for (std::size_t k = 0; k < nu.size(); ++k)
    m = std::min(m, nu[k] / (1.0 + std::sqrt(norm2(nu.grid.node(k), nu.grid.dim))));
  return m;
}

inline double collision_frequency_ceiling(const Distribution& nu) {
  double m = 0.0;
  for (std::size_t k = 0; k < nu.size(); ++k)
    m = std::max(m, nu[k] / (1.0 + std::sqrt(norm2(nu.grid.node(k), nu.grid.dim))));
  return m;
}

}  // namespace granular

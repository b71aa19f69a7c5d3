#pragma once

// Acceptance suite on the discretized operator. Shared by the `verify`
// subcommand and the acceptance test binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "granular/collision.hpp"
#include "granular/config.hpp"
#include "granular/dispersion.hpp"
#include "granular/equilibrium.hpp"
#include "granular/io.hpp"
#include "granular/linop.hpp"
#include "granular/spectrum.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

/// Pinned tolerances.
namespace tolerance {
inline constexpr double conservation = 1e-12;
inline constexpr double energy_identity = 0.02;
inline constexpr double balance = 0.05;
inline constexpr double balance_seconds = 120.0;
inline constexpr double temperature = 0.10;
inline constexpr double kernel_ratio = 0.1;
inline constexpr double kernel_seconds = 60.0;
inline constexpr double acoustic = 0.05;
inline constexpr double shear_fraction = 0.05;
inline constexpr double e1_fit = 0.10;
inline constexpr double e1_ratio = 0.05;
inline constexpr double induction = 0.10;
inline constexpr double symmetry = 1e-9;
inline constexpr double confinement = 1e-6;
inline constexpr double confinement_alpha_min = 0.97;
inline constexpr double gram = 1e-12;
inline constexpr double roots = 1e-14;
inline constexpr int gram_samples = 100;
inline constexpr double runtime_seconds = 900.0;
inline constexpr std::size_t dense_limit = 4096;
}  // namespace tolerance

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  json data = json::object();
};

inline std::string describe(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << std::setw(2) << r.id << " " << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  "
     << r.detail;
  return os.str();
}

namespace detail {

inline std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(Setup setup, int threads = 1) : s_(std::move(setup)), threads_(std::max(1, threads)) {}

  const Setup& setup() const { return s_; }

  static constexpr int count() { return 12; }

  static std::string name(int id) {
    static const char* names[] = {"conservation",          "energy identity",     "balance equation",
                                  "quasi-elastic temperature", "kernel dimension", "acoustic coefficient",
                                  "energy slope",          "second-order damping", "symmetry and reality",
                                  "left half-plane",       "gram determinant",    "end-to-end runtime"};
    return names[id - 1];
  }

  CriterionResult run(int id) {
    CriterionResult r;
    r.id = id;
    r.name = name(id);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (id) {
        case 1: conservation(r); break;
        case 2: energy_identity(r); break;
        case 3: balance(r); break;
        case 4: temperature(r); break;
        case 5: kernel_dimension(r); break;
        case 6: acoustic(r); break;
        case 7: energy_slope_check(r); break;
        case 8: damping(r); break;
        case 9: symmetry(r); break;
        case 10: confinement(r); break;
        case 11: gram(r); break;
        case 12: runtime(r); break;
        default: throw std::invalid_argument("unknown criterion " + std::to_string(id));
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = detail::seconds_since(t0);
    return r;
  }

  /// Runs 1..12 in order; `sink` sees each result as soon as it is known.
  std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& sink = {}) {
    start_ = std::chrono::steady_clock::now();
    std::vector<CriterionResult> out;
    for (int id = 1; id <= count(); ++id) {
      out.push_back(run(id));
      if (sink) sink(out.back());
    }
    return out;
  }

 private:
  Setup s_;
  int threads_;
  std::optional<std::chrono::steady_clock::time_point> start_;

  std::optional<Distribution> f1_;
  std::optional<LinearOperatorMatrix> a1_;
  std::optional<FourierSolver> solver1_;
  std::optional<BranchFitReport> fits1_;
  std::map<double, EquilibriumResult> equilibria_;
  std::map<double, double> equilibrium_seconds_;
  std::map<double, LinearOperatorMatrix> operators_;

  const GridSpec& grid() const { return s_.grid; }
  int dim() const { return s_.grid.dim; }

  void require_dense() const {
    if (grid().size() > tolerance::dense_limit)
      throw std::runtime_error("grid of " + std::to_string(grid().size()) + " nodes exceeds the dense limit " +
                               std::to_string(tolerance::dense_limit));
  }

  const Distribution& f1() {
    if (!f1_) f1_ = elastic_equilibrium(grid(), s_.b, s_.quad);
    return *f1_;
  }

  EquilibriumOptions equilibrium_options() const {
    EquilibriumOptions o;
    o.method = s_.config.solver == "relaxation" ? EquilibriumMethod::relaxation : EquilibriumMethod::newton;
    o.tol = s_.config.tol;
    o.max_iter = s_.config.max_iter;
    o.dt = s_.config.dt;
    o.threads = threads_;
    return o;
  }

  const EquilibriumResult& equilibrium(double alpha) {
    auto it = equilibria_.find(alpha);
    if (it != equilibria_.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    EquilibriumResult r = solve_equilibrium(alpha, grid(), s_.b, s_.quad, equilibrium_options());
    equilibrium_seconds_[alpha] = detail::seconds_since(t0);
    return equilibria_.emplace(alpha, std::move(r)).first->second;
  }

  const LinearOperatorMatrix& linearized(double alpha) {
    if (alpha == 1.0) {
      if (!a1_) {
        require_dense();
        CollisionKernel k(grid(), 1.0, s_.b, s_.quad);
        a1_ = assemble_linearized(k, f1(), threads_);
      }
      return *a1_;
    }
    auto it = operators_.find(alpha);
    if (it != operators_.end()) return it->second;
    require_dense();
    const Distribution& f = equilibrium(alpha).profile;
    CollisionKernel k(grid(), alpha, s_.b, s_.quad);
    return operators_.emplace(alpha, assemble_linearized(k, f, threads_)).first->second;
  }

  const FourierSolver& solver1() {
    if (!solver1_) solver1_.emplace(linearized(1.0), s_.config.omega);
    return *solver1_;
  }

  const BranchFitReport& fits1() {
    if (!fits1_) {
      TrackOptions opt;
      opt.overlap_threshold = s_.config.overlap_threshold;
      opt.threads = threads_;
      fits1_ = fit_branches(solver1(), s_.rho0, opt);
    }
    return *fits1_;
  }

  const ExpansionFit& fit_for(int label) {
    for (const auto& f : fits1().fits)
      if (f.label == label) return f;
    throw std::runtime_error("no branch with label " + std::to_string(label));
  }

  std::size_t branch_index(int label) {
    const auto& br = fits1().branches;
    for (std::size_t i = 0; i < br.size(); ++i)
      if (br[i].label == label) return i;
    throw std::runtime_error("no branch with label " + std::to_string(label));
  }

  double rel(double a, double b) const { return std::abs(a - b) / std::abs(b); }

  // 1
  void conservation(CriterionResult& r) {
    std::mt19937_64 rng(s_.config.seed);
    std::uniform_real_distribution<double> uc(-1.5, 1.5), ut(0.5, 1.5), um(0.2, 1.0);
    double worst = 0.0;
    int samples = 0;
    for (double alpha : {1.0, 0.9}) {
      CollisionKernel k(grid(), alpha, s_.b, s_.quad);
      for (int s = 0; s < 3; ++s) {
        Distribution f(grid());
        for (int bump = 0; bump < 3; ++bump) {
          Vec u{0.0, 0.0, 0.0};
          for (int a = 0; a < dim(); ++a) u[a] = uc(rng);
          f += maxwellian(grid(), um(rng), u, ut(rng));
        }
        const CollisionResult q = k.apply(f, f, threads_);
        const Distribution val = q.value();
        double scale = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
          scale += (std::abs(q.gain[i]) + std::abs(q.loss[i])) * (1.0 + std::sqrt(norm2(grid().node(i), dim())));
        scale *= grid().cell_volume();
        double err = std::abs(quadrature(val));
        for (int a = 0; a < dim(); ++a) err = std::max(err, std::abs(integrate(val, [a](const Vec& v) { return v[a]; })));
        worst = std::max(worst, err / scale);
        ++samples;
      }
    }
    r.passed = worst <= tolerance::conservation;
    r.detail = "max relative moment defect " + detail::sci(worst) + " over " + std::to_string(samples) +
               " random profiles (tol " + detail::sci(tolerance::conservation) + ")";
    r.data = {{"max_relative_defect", worst}};
  }

  // 2
  void energy_identity(CriterionResult& r) {
    const Distribution m = maxwellian(grid(), 1.0, {0.0, 0.0, 0.0}, 1.0);
    const double d = dissipation(m, m, s_.b, s_.quad);
    auto energy = [this](const Vec& v) { return norm2(v, dim()); };
    double worst = 0.0, worst_probe = 0.0;
    json rows = json::array();
    for (double alpha : {0.9, 0.99}) {
      CollisionKernel k(grid(), alpha, s_.b, s_.quad);
      const Distribution q = k.collide(m, m, threads_);
      const double lhs = integrate(q, energy);
      const double target = -(1.0 - alpha * alpha) * d;
      const double probe = weak_probe(m, m, energy, alpha, s_.b, s_.quad);
      const double e = std::abs(lhs - target) / std::abs(target);
      const double ep = std::abs(probe - target) / std::abs(target);
      worst = std::max(worst, e);
      worst_probe = std::max(worst_probe, ep);
      rows.push_back({{"alpha", alpha}, {"energy_change", lhs}, {"probe", probe}, {"target", target}});
    }
    r.passed = worst <= tolerance::energy_identity && worst_probe <= tolerance::energy_identity;
    r.detail = "relative error " + detail::sci(worst) + ", weak probe " + detail::sci(worst_probe) + " (tol " +
               detail::sci(tolerance::energy_identity) + ")";
    r.data = {{"rows", rows}, {"max_relative_error", worst}, {"max_probe_error", worst_probe}};
  }

  // 3
  void balance(CriterionResult& r) {
    const double alpha = 0.99;
    const EquilibriumResult& e = equilibrium(alpha);
    const double secs = equilibrium_seconds_[alpha];
    const double bound = tolerance::balance * 2.0 * dim();
    r.passed = e.balance <= bound && secs <= tolerance::balance_seconds;
    r.detail = "|(1+a)D - 2d| = " + detail::sci(e.balance) + " (bound " + detail::sci(bound) + "), solve " +
               detail::sci(secs) + " s, residual " + detail::sci(e.residual);
    r.data = {{"balance", e.balance}, {"seconds", secs}, {"residual", e.residual}, {"converged", e.converged}};
  }

  // 4
  void temperature(CriterionResult& r) {
    std::vector<double> alphas{0.95, 0.97, 0.99}, errs;
    json rows = json::array();
    for (double a : alphas) {
      const EquilibriumResult& e = equilibrium(a);
      const double t = e.macro.temperature.value_or(std::nan(""));
      errs.push_back(rel(t, s_.t1));
      rows.push_back({{"alpha", a}, {"temperature", t}, {"relative_error", errs.back()}});
    }
    const bool monotone = errs[0] > errs[1] && errs[1] > errs[2];
    r.passed = errs[2] <= tolerance::temperature && monotone;
    r.detail = "rel errors " + detail::sci(errs[0]) + " > " + detail::sci(errs[1]) + " > " + detail::sci(errs[2]) +
               (monotone ? "" : " (not monotone)") + ", T1 = " + format_double(s_.t1);
    r.data = {{"rows", rows}, {"t1", s_.t1}, {"monotone", monotone}};
  }

  // 5
  void kernel_dimension(CriterionResult& r) {
    const auto t0 = std::chrono::steady_clock::now();
    const LinearOperatorMatrix& a = linearized(1.0);
    const EigenDecomposition ed = eig(RMatrix(a.real), false);
    const double secs = detail::seconds_since(t0);
    std::vector<cplx> vals(ed.values.data(), ed.values.data() + ed.values.size());
    std::sort(vals.begin(), vals.end(), [](cplx x, cplx y) { return x.real() > y.real(); });
    const std::size_t k = static_cast<std::size_t>(dim()) + 2;
    const double gap = -vals[k].real();
    std::size_t small = 0;
    double largest_small = 0.0;
    for (cplx v : vals)
      if (std::abs(v) <= tolerance::kernel_ratio * gap) {
        ++small;
        largest_small = std::max(largest_small, std::abs(v));
      }
    r.passed = gap > 0.0 && small == k && secs <= tolerance::kernel_seconds;
    r.detail = std::to_string(small) + " eigenvalues with |l| <= gap/10 (expected " + std::to_string(k) +
               "), gap " + format_double(gap) + ", largest kernel |l| " + detail::sci(largest_small) + ", " +
               detail::sci(secs) + " s";
    r.data = {{"gap", gap}, {"kernel_count", small}, {"largest_kernel_modulus", largest_small}, {"seconds", secs}};
  }

  // 6
  void acoustic(CriterionResult& r) {
    const double target = acoustic_speed_stated(dim(), s_.t1);
    const ExpansionFit& plus = fit_for(1);
    const ExpansionFit& minus = fit_for(-1);
    const double ep = std::abs(plus.lambda1 - cplx(0.0, target)) / target;
    const double em = std::abs(minus.lambda1 - cplx(0.0, -target)) / target;
    double shear = 0.0;
    for (int j = 2; j <= dim(); ++j) shear = std::max(shear, std::abs(fit_for(j).lambda1));
    r.passed = ep <= tolerance::acoustic && em <= tolerance::acoustic && shear <= tolerance::shear_fraction * target;
    r.detail = "lambda1(+1) = " + format_double(plus.lambda1.imag()) + "i vs " + format_double(target) +
               "i (rel " + detail::sci(ep) + "), (-1) rel " + detail::sci(em) + ", shear |lambda1| " +
               detail::sci(shear);
    r.data = {{"target", target},
              {"lambda1_plus", complex_json(plus.lambda1)},
              {"lambda1_minus", complex_json(minus.lambda1)},
              {"shear_max", shear}};
  }

  // 7
  void energy_slope_check(CriterionResult& r) {
    std::vector<double> alphas, values;
    for (double a : s_.config.alphas) {
      const FourierSolver solver(linearized(a), s_.config.omega);
      const SpectrumSummary sm = solver.summary(0.0, false);
      double mn = sm.hydro.front().value.real();
      for (const auto& p : sm.hydro) mn = std::min(mn, p.value.real());
      alphas.push_back(a);
      values.push_back(mn);
    }
    double resid = 0.0;
    const double e1 = fit_energy_slope(alphas, values, &resid);
    const double target = 3.0 / s_.t1;
    const EnergyEigenvectorData ed = energy_slope(f1(), s_.t1, s_.b, s_.quad);
    const double ef = rel(e1, target), er = rel(ed.e1_numeric, target);
    r.passed = ef <= tolerance::e1_fit && er <= tolerance::e1_ratio;
    r.detail = "fitted e1 " + format_double(e1) + " vs " + format_double(target) + " (rel " + detail::sci(ef) +
               "), 4D/E " + format_double(ed.e1_numeric) + " (rel " + detail::sci(er) + ")";
    r.data = {{"alphas", alphas}, {"energy_eigenvalues", values}, {"e1_fit", e1}, {"fit_residual", resid},
              {"e1_ratio", ed.e1_numeric}, {"target", target}};
  }

  // 8
  void damping(CriterionResult& r) {
    const BranchFitReport& f = fits1();
    bool all = true;
    json rows = json::array();
    for (const auto& fit : f.fits) {
      const double second = -2.0 * fit.lambda2.real();
      all = all && second < 0.0;
      rows.push_back({{"label", fit.label}, {"lambda2", complex_json(fit.lambda2)}, {"d2lambda", second}});
    }
    const std::size_t ie = branch_index(0);
    const Branch& br = f.branches[ie];
    const cplx l1 = fit_for(0).lambda1;
    const InductionResult ind = lambda2_induction(s_.config.omega, linearized(1.0), br.samples[1].vector, l1);
    const double fd = fit_for(0).lambda2.real();
    const double e = std::abs(ind.lambda2 - fit_for(0).lambda2) / std::abs(fd);
    r.passed = all && e <= tolerance::induction;
    r.detail = std::string(all ? "all" : "not all") + " d2l/drho2 < 0; energy lambda2 induction " +
               format_double(ind.lambda2.real()) + " vs difference " + format_double(fd) + " (rel " +
               detail::sci(e) + ", solvability " + detail::sci(ind.solvability) + ")";
    r.data = {{"branches", rows},
              {"induction", complex_json(ind.lambda2)},
              {"finite_difference", fd},
              {"solvability", ind.solvability},
              {"singular_gap", ind.singular_gap}};
  }

  // 9
  void symmetry(CriterionResult& r) {
    const BranchFitReport& f = fits1();
    const double scale = f.symmetry_scale;
    double imag0 = 0.0;
    for (const auto& s : f.branches[branch_index(0)].samples) imag0 = std::max(imag0, std::abs(s.lambda.imag()));
    const double bound = tolerance::symmetry * scale;
    r.passed = f.symmetry_deviation <= bound && imag0 <= bound;
    r.detail = "max |l(-rho) - conj l(rho)| " + detail::sci(f.symmetry_deviation) + ", max |Im l0| " +
               detail::sci(imag0) + " (bound " + detail::sci(bound) + ")";
    r.data = {{"deviation", f.symmetry_deviation}, {"energy_imag", imag0}, {"scale", scale}};
  }

  // 10
  void confinement(CriterionResult& r) {
    const std::vector<double> rhos = s_.config.rho_grid();
    double worst = -1e300, worst_alpha = 0.0, worst_rho = 0.0;
    int points = 0;
    for (double a : s_.config.alphas) {
      if (a < tolerance::confinement_alpha_min) continue;
      const FourierSolver solver(linearized(a), s_.config.omega);
      std::vector<double> mx(rhos.size());
      parallel_blocks(rhos.size(), threads_, [&](std::size_t i) {
        const SpectrumSummary sm = solver.summary(rhos[i], false);
        double m = -1e300;
        for (const auto& p : sm.hydro) m = std::max(m, p.value.real());
        mx[i] = m;
      });
      for (std::size_t i = 0; i < rhos.size(); ++i) {
        ++points;
        if (mx[i] > worst) {
          worst = mx[i];
          worst_alpha = a;
          worst_rho = rhos[i];
        }
      }
    }
    if (points == 0) throw std::runtime_error("no alpha in the configured list lies in [0.97, 1]");
    r.passed = worst <= tolerance::confinement;
    r.detail = "max Re over " + std::to_string(points) + " (alpha, rho) points " + detail::sci(worst) +
               " at alpha " + format_double(worst_alpha) + ", rho " + format_double(worst_rho);
    r.data = {{"max_real", worst}, {"alpha", worst_alpha}, {"rho", worst_rho}, {"points", points}};
  }

  // 11
  void gram(CriterionResult& r) {
    const Distribution nu = loss_potential(f1(), s_.b, s_.quad);
    const double cn = c_nu(f1(), nu);
    std::mt19937_64 rng(s_.config.seed + 11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < tolerance::gram_samples; ++i) {
      const GramLimit g = gram_limit(cplx(u(rng), u(rng)), dim(), s_.t1, cn);
      worst = std::max(worst, g.relative_error);
    }
    const DispersionRoots z = dispersion_roots(dim(), s_.t1);
    const double stated = acoustic_speed_stated(dim(), s_.t1);
    double root_dev = std::abs(z[0]);
    root_dev = std::max(root_dev, std::abs(z[1] - cplx(0.0, stated)) / stated);
    root_dev = std::max(root_dev, std::abs(z[-1] - cplx(0.0, -stated)) / stated);
    double cubic = 0.0;
    for (int j = -1; j <= 1; ++j) {
      const cplx zz = z[j];
      cubic = std::max(cubic, std::abs(static_cast<double>(dim()) * zz * zz * zz + (dim() + 2.0) * s_.t1 * zz) /
                                  (dim() * std::pow(std::max(1.0, std::abs(zz)), 3)));
    }
    r.passed = worst <= tolerance::gram && root_dev <= tolerance::roots && cubic <= tolerance::gram;
    r.detail = "det vs cubic " + detail::sci(worst) + " over " + std::to_string(tolerance::gram_samples) +
               " z, roots vs stated formula " + detail::sci(root_dev) + ", cubic at roots " + detail::sci(cubic) +
               ", c_nu " + format_double(cn);
    r.data = {{"max_relative_error", worst}, {"root_deviation", root_dev}, {"cubic_residual", cubic}, {"c_nu", cn}};
  }

  // 12
  void runtime(CriterionResult& r) {
    if (!start_) throw std::runtime_error("runtime is only measured by a full run");
    const double secs = detail::seconds_since(*start_);
    r.passed = secs <= tolerance::runtime_seconds;
    r.detail = "suite wall time " + format_double(std::round(secs * 10.0) / 10.0) + " s with " +
               std::to_string(threads_) + " thread(s) (limit " + format_double(tolerance::runtime_seconds) + " s)";
    r.data = {{"seconds", secs}, {"threads", threads_}};
  }
};

}  // namespace granular

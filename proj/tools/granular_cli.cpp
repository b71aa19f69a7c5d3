// Command-line front end for the heated inelastic Boltzmann solver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "granular/granular.hpp"

namespace fs = std::filesystem;
using namespace granular;

namespace {

enum ExitCode { kOk = 0, kVerificationFailure = 1, kUsage = 2, kNumerical = 3 };

struct CommonOptions {
  std::string config_path;
  std::string out = "out";
  std::vector<std::string> sets;
  int threads = default_thread_count();
};

struct Context {
  Setup setup;
  fs::path out;
  OutputHeader header;
  int threads = 1;
};

Context make_context(const CommonOptions& o, const std::string& command) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  for (const auto& kv : o.sets) apply_override(cfg, kv);
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  Context c;
  c.setup = make_setup(cfg);
  c.out = o.out;
  c.threads = o.threads;
  c.header.config_hash = config_hash(c.setup.config);
  c.header.command = command;
  fs::create_directories(c.out);
  return c;
}

std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

json setup_json(const Context& c) {
  return {{"config", config_json(c.setup.config)},
          {"grid", {{"d", c.setup.grid.dim}, {"N", c.setup.grid.points}, {"L", c.setup.grid.half_extent},
                    {"h", c.setup.grid.spacing}}},
          {"cross_section", c.setup.b.name},
          {"t1", c.setup.t1},
          {"rho0", c.setup.rho0}};
}

EquilibriumOptions equilibrium_options(const Context& c) {
  EquilibriumOptions o;
  o.method = c.setup.config.solver == "relaxation" ? EquilibriumMethod::relaxation : EquilibriumMethod::newton;
  o.tol = c.setup.config.tol;
  o.max_iter = c.setup.config.max_iter;
  o.dt = c.setup.config.dt;
  o.threads = c.threads;
  return o;
}

Distribution profile_for(const Context& c, double alpha, EquilibriumResult* diag = nullptr) {
  EquilibriumResult r = solve_equilibrium(alpha, c.setup.grid, c.setup.b, c.setup.quad, equilibrium_options(c));
  if (!r.converged) throw std::runtime_error("equilibrium at alpha=" + tag(alpha) + " did not converge (residual " +
                                             format_double(r.residual) + ")");
  Distribution f = r.profile;
  if (diag) *diag = std::move(r);
  return f;
}

int cmd_equilibrium(const Context& c) {
  json runs = json::array();
  bool ok = true;
  for (double alpha : c.setup.config.alphas) {
    EquilibriumResult r = solve_equilibrium(alpha, c.setup.grid, c.setup.b, c.setup.quad, equilibrium_options(c));
    const std::string stem = "equilibrium_alpha_" + tag(alpha);
    write_profile_csv(c.out / (stem + ".csv"), c.header, r.profile);
    write_profile(c.out / (stem + ".bin"), c.header, r.profile);
    const double t = r.macro.temperature.value_or(std::nan(""));
    runs.push_back({{"alpha", alpha},
                    {"method", r.method},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"residual", number(r.residual)},
                    {"balance_residual", number(r.balance)},
                    {"balance_bound", 0.05 * 2.0 * c.setup.grid.dim},
                    {"mass", r.macro.mass},
                    {"temperature", number(t)},
                    {"t1", c.setup.t1},
                    {"temperature_relative_error", number(std::abs(t - c.setup.t1) / c.setup.t1)},
                    {"clipped_mass", r.clipped_mass},
                    {"leakage", r.leakage},
                    {"monotonicity_warning", r.monotonicity_warning},
                    {"history", r.history},
                    {"profile_csv", stem + ".csv"},
                    {"profile_bin", stem + ".bin"}});
    std::cout << "alpha " << tag(alpha) << ": " << r.method << (r.converged ? " converged" : " NOT converged")
              << ", residual " << r.residual << ", balance " << r.balance << ", T " << t << "\n";
    ok = ok && r.converged;
  }
  json body = setup_json(c);
  body["runs"] = runs;
  write_json(c.out / "equilibrium.json", c.header, body);
  return ok ? kOk : kNumerical;
}

int cmd_spectrum(const Context& c) {
  const Setup& s = c.setup;
  const std::vector<double> rhos = s.config.rho_grid();
  TrackOptions topt;
  topt.overlap_threshold = s.config.overlap_threshold;
  topt.threads = c.threads;

  std::vector<std::string> cols{"j"};
  for (int a = 0; a < s.grid.dim; ++a) cols.push_back("omega_" + std::to_string(a + 1));
  for (const char* n : {"rho", "alpha", "re_lambda", "im_lambda", "residual", "re_lambda_neg", "im_lambda_neg"})
    cols.push_back(n);
  CsvWriter branches_csv(c.out / "branches.csv", c.header, cols);

  std::vector<std::string> pcols{"alpha", "rho"};
  std::vector<int> labels{-1, 0, 1};
  for (int j = 2; j <= s.grid.dim; ++j) labels.push_back(j);
  for (int j : labels) {
    pcols.push_back("re_" + std::to_string(j));
    pcols.push_back("im_" + std::to_string(j));
  }
  CsvWriter plot_csv(c.out / "spectrum_plot.csv", c.header, pcols);

  json per_alpha = json::array();
  json failures = json::array();
  std::vector<double> e_alphas, e_values;
  for (double alpha : s.config.alphas) {
    const Distribution f = alpha == 1.0 ? elastic_equilibrium(s.grid, s.b, s.quad) : profile_for(c, alpha);
    CollisionKernel kernel(s.grid, alpha, s.b, s.quad);
    const LinearOperatorMatrix a = assemble_linearized(kernel, f, c.threads);
    const FourierSolver solver(a, s.config.omega);
    const std::vector<Branch> branches = track_branches(solver, rhos, topt);

    // conjugate partners from the general complex route
    std::vector<SpectrumSummary> neg(rhos.size());
    parallel_blocks(rhos.size(), c.threads, [&](std::size_t i) { neg[i] = solver.summary(-rhos[i], false, true); });
    for (const auto& br : branches) {
      if (br.failed) failures.push_back({{"alpha", alpha}, {"label", br.label}, {"reason", br.failure}});
      for (const auto& smp : br.samples) {
        std::size_t i = 0;
        while (i < rhos.size() && std::abs(rhos[i] - smp.rho) > 1e-14) ++i;
        cplx partner = std::conj(smp.lambda);
        cplx best = neg[i].hydro.front().value;
        for (const auto& p : neg[i].hydro)
          if (std::abs(p.value - partner) < std::abs(best - partner)) best = p.value;
        std::vector<std::string> row{std::to_string(br.label)};
        for (int d = 0; d < s.grid.dim; ++d) row.push_back(format_double(br.omega[d]));
        for (double x : {smp.rho, alpha, smp.lambda.real(), smp.lambda.imag(), smp.residual, best.real(), best.imag()})
          row.push_back(format_double(x));
        branches_csv.row_strings(row);
      }
    }
    for (double rho : rhos) {
      std::vector<std::string> row{format_double(alpha), format_double(rho)};
      for (int j : labels) {
        const BranchSample* smp = nullptr;
        for (const auto& br : branches)
          if (br.label == j) smp = br.at(rho, alpha);
        row.push_back(smp ? format_double(smp->lambda.real()) : "nan");
        row.push_back(smp ? format_double(smp->lambda.imag()) : "nan");
      }
      plot_csv.row_strings(row);
    }

    const SpectrumSummary at0 = solver.summary(0.0, false);
    double energy = at0.hydro.front().value.real();
    for (const auto& p : at0.hydro) energy = std::min(energy, p.value.real());
    e_alphas.push_back(alpha);
    e_values.push_back(energy);

    json fits = json::array();
    try {
      const BranchFitReport rep = fit_branches(solver, s.rho0, topt);
      const double speed = acoustic_speed_stated(s.grid.dim, s.t1);
      for (const auto& fit : rep.fits) {
        const cplx target = fit.label == 1 ? cplx(0.0, speed) : fit.label == -1 ? cplx(0.0, -speed) : cplx(0.0, 0.0);
        fits.push_back({{"j", fit.label},
                        {"lambda0", complex_json(fit.lambda0)},
                        {"lambda1", complex_json(fit.lambda1)},
                        {"lambda1_target", complex_json(target)},
                        {"lambda1_relative_error",
                         std::abs(target) > 0.0 ? number(std::abs(fit.lambda1 - target) / std::abs(target)) : json(nullptr)},
                        {"lambda1_abs_error", std::abs(fit.lambda1 - target)},
                        {"lambda2", complex_json(fit.lambda2)},
                        {"richardson_change_lambda1", fit.lambda1_richardson_change},
                        {"richardson_change_lambda2", fit.lambda2_richardson_change}});
      }
      per_alpha.push_back({{"alpha", alpha},
                           {"rho0", s.rho0},
                           {"symmetry_deviation", rep.symmetry_deviation},
                           {"max_residual", rep.max_residual},
                           {"gap_at_rho0", at0.gap},
                           {"branches", fits}});
    } catch (const std::exception& e) {
      failures.push_back({{"alpha", alpha}, {"reason", e.what()}});
    }
    std::cout << "alpha " << tag(alpha) << ": " << branches.size() << " branches over " << rhos.size()
              << " frequencies, gap " << at0.gap << "\n";
  }
  json body = setup_json(c);
  body["fits"] = per_alpha;
  if (e_alphas.size() >= 2) {
    double resid = 0.0;
    const double e1 = fit_energy_slope(e_alphas, e_values, &resid);
    body["energy_slope"] = {{"alphas", e_alphas},
                            {"energy_eigenvalues", e_values},
                            {"e1", e1},
                            {"e1_target", 3.0 / s.t1},
                            {"relative_error", std::abs(e1 - 3.0 / s.t1) / (3.0 / s.t1)},
                            {"fit_residual", resid}};
  }
  body["failures"] = failures;
  write_json(c.out / "fits.json", c.header, body);
  return failures.empty() ? kOk : kNumerical;
}

int cmd_dispersion(const Context& c) {
  const Setup& s = c.setup;
  const int d = s.grid.dim;
  const Distribution f1 = elastic_equilibrium(s.grid, s.b, s.quad);
  const Distribution nu = loss_potential(f1, s.b, s.quad);
  const double cn = c_nu(f1, nu);
  std::mt19937_64 rng(s.config.seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) worst = std::max(worst, gram_limit(cplx(u(rng), u(rng)), d, s.t1, cn).relative_error);
  const DispersionRoots z = dispersion_roots(d, s.t1);
  const EnergyEigenvectorData e = energy_slope(f1, s.t1, s.b, s.quad);

  json body = setup_json(c);
  body["c_nu"] = cn;
  body["gram"] = {{"samples", 100}, {"max_relative_error", worst}};
  body["roots"] = {{"z_minus", complex_json(z[-1])}, {"z_0", complex_json(z[0])}, {"z_plus", complex_json(z[1])}};
  body["stated_acoustic_speed"] = acoustic_speed_stated(d, s.t1);
  body["transverse"] = {{"slope", transverse_limit(1.0, s.t1).real()}, {"root", 0.0}, {"multiplicity", 1}};
  body["energy"] = {{"c0", e.c0},
                    {"energy", e.energy},
                    {"pairing", e.pairing},
                    {"mass", e.mass},
                    {"e1_numeric", e.e1_numeric},
                    {"e1_analytic", e.e1_analytic},
                    {"relative_error", std::abs(e.e1_numeric - e.e1_analytic) / e.e1_analytic}};
  if (s.grid.size() <= tolerance::dense_limit) {
    CollisionKernel k(s.grid, 1.0, s.b, s.quad);
    const LinearOperatorMatrix a1 = assemble_linearized(k, f1, c.threads);
    const FourierSolver solver(a1, s.config.omega);
    TrackOptions topt;
    topt.overlap_threshold = s.config.overlap_threshold;
    topt.threads = c.threads;
    const BranchFitReport rep = fit_branches(solver, s.rho0, topt);
    json rows = json::array();
    for (std::size_t b = 0; b < rep.branches.size(); ++b) {
      const InductionResult ind =
          lambda2_induction(s.config.omega, a1, rep.branches[b].samples[1].vector, rep.fits[b].lambda1);
      rows.push_back({{"j", rep.fits[b].label},
                      {"lambda2_induction", complex_json(ind.lambda2)},
                      {"lambda2_difference", complex_json(rep.fits[b].lambda2)},
                      {"first_order", complex_json(ind.first_order)},
                      {"solvability", ind.solvability},
                      {"singular_gap", ind.singular_gap},
                      {"cluster_size", ind.cluster_size}});
    }
    body["induction"] = rows;
  }
  write_json(c.out / "dispersion.json", c.header, body);
  std::cout << "T1 " << s.t1 << ", z+ " << z[1].imag() << "i, e1 " << e.e1_numeric << " (analytic " << e.e1_analytic
            << "), gram error " << worst << "\n";
  return worst <= 1e-12 ? kOk : kNumerical;
}

int cmd_verify(const Context& c) {
  AcceptanceSuite suite(c.setup, c.threads);
  json rows = json::array();
  bool all = true;
  suite.run_all([&](const CriterionResult& r) {
    std::cout << describe(r) << std::endl;
    rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                    {"seconds", r.seconds}, {"data", r.data}});
    all = all && r.passed;
  });
  json body = setup_json(c);
  body["criteria"] = rows;
  body["all_passed"] = all;
  write_json(c.out / "verify.json", c.header, body);
  std::cout << (all ? "all criteria passed" : "some criteria failed") << "\n";
  return all ? kOk : kVerificationFailure;
}

int cmd_clustering_scan(const Context& c) {
  const Setup& s = c.setup;
  const std::vector<double> rhos = s.config.rho_grid();
  const double damped_below = -1e-9;
  CsvWriter sweep(c.out / "clustering_sweep.csv", c.header, {"alpha", "rho", "max_re_hydro", "min_re_hydro"});
  CsvWriter table(c.out / "clustering_scan.csv", c.header,
                  {"alpha", "min_abs_max_re", "max_re_overall", "first_damped_rho", "crosses"});
  json rows = json::array();
  for (double alpha : s.config.alphas) {
    const Distribution f = alpha == 1.0 ? elastic_equilibrium(s.grid, s.b, s.quad) : profile_for(c, alpha);
    CollisionKernel kernel(s.grid, alpha, s.b, s.quad);
    const FourierSolver solver(assemble_linearized(kernel, f, c.threads), s.config.omega);
    std::vector<double> mx(rhos.size()), mn(rhos.size());
    parallel_blocks(rhos.size(), c.threads, [&](std::size_t i) {
      const SpectrumSummary sm = solver.summary(rhos[i], false);
      double hi = -1e300, lo = 1e300;
      for (const auto& p : sm.hydro) {
        hi = std::max(hi, p.value.real());
        lo = std::min(lo, p.value.real());
      }
      mx[i] = hi;
      mn[i] = lo;
    });
    double min_abs = 1e300, overall = -1e300, first = std::nan("");
    for (std::size_t i = 0; i < rhos.size(); ++i) {
      sweep.row({alpha, rhos[i], mx[i], mn[i]});
      min_abs = std::min(min_abs, std::abs(mx[i]));
      overall = std::max(overall, mx[i]);
      if (std::isnan(first) && mx[i] < damped_below) first = rhos[i];
    }
    const bool crosses = overall > tolerance::confinement;
    table.row({alpha, min_abs, overall, first, crosses ? 1.0 : 0.0});
    rows.push_back({{"alpha", alpha},
                    {"min_abs_max_re", min_abs},
                    {"max_re_overall", overall},
                    {"first_damped_rho", number(first)},
                    {"crosses", crosses}});
    std::cout << "alpha " << tag(alpha) << ": max Re " << overall << ", first damped rho " << first << "\n";
  }
  json body = setup_json(c);
  body["scan"] = rows;
  write_json(c.out / "clustering_scan.json", c.header, body);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  pin_blas_kernels(argv);
  CLI::App app{"Linearized heated inelastic Boltzmann operator: equilibria, spectra, dispersion"};
  app.require_subcommand(1);
  CommonOptions opts;
  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--set", opts.sets, "override KEY=VALUE (repeatable)")->take_all()->allow_extra_args(false);
    sub->add_option("--threads", opts.threads, "worker threads")->capture_default_str();
  };
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const Context&);
  };
  const Entry entries[] = {
      {"equilibrium", "solve for the heated equilibrium at each alpha", cmd_equilibrium},
      {"spectrum", "track hydrodynamic branches over the rho range", cmd_spectrum},
      {"dispersion", "analytic dispersion references and the induction step", cmd_dispersion},
      {"verify", "run the acceptance suite", cmd_verify},
      {"clustering-scan", "damping of the hydrodynamic branches per alpha", cmd_clustering_scan},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    subs.emplace_back(sub, &e);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  for (const auto& [sub, entry] : subs) {
    if (!sub->parsed()) continue;
    try {
      const Context ctx = make_context(opts, entry->name);
      return entry->fn(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kUsage;
    } catch (const std::exception& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    }
  }
  return kUsage;
}

#pragma once

// Run configuration: flat key = value files, command-line overrides and the
// derived numerical setup (grid, sphere quadrature, cross-section).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granular/collision.hpp"
#include "granular/equilibrium.hpp"
#include "granular/io.hpp"
#include "granular/velocity_grid.hpp"

namespace granular {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int dim = 2;
  int points = 32;
  double half_extent = 0.0;  // 0: 8 sqrt(max(1, T1))
  std::vector<double> alphas{1.0, 0.99, 0.97, 0.95};
  Vec omega{1.0, 0.0, 0.0};
  double rho_min = 0.0;
  double rho_max = 0.3;
  int rho_steps = 16;
  double rho0 = 0.0;  // 0: 0.02 sqrt(T1) (8 / L)
  std::string cross_section = "unit-temperature";
  double b_value = 1.0;
  double b_slope = 0.0;
  int sphere_points = 0;  // 0: 16 for d = 2, 32 for d = 3
  std::string solver = "newton";
  double tol = 1e-6;
  long max_iter = 200000;
  double dt = 0.0;
  unsigned seed = 20240611;
  double overlap_threshold = 0.7;

  std::vector<double> rho_grid() const {
    std::vector<double> r(rho_steps);
    for (int i = 0; i < rho_steps; ++i)
      r[i] = rho_steps == 1 ? rho_min : rho_min + (rho_max - rho_min) * i / (rho_steps - 1);
    return r;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  is.imbue(std::locale::classic());
  double x = 0.0;
  if (!(is >> x) || !(is >> std::ws).eof() || !std::isfinite(x))
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

inline long parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x)) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<long>(x);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' is empty");
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = detail::trim(key_in), v = detail::trim(value_in);
  if (key == "d" || key == "dim") {
    c.dim = static_cast<int>(detail::parse_int(key, v));
  } else if (key == "N" || key == "points") {
    c.points = static_cast<int>(detail::parse_int(key, v));
  } else if (key == "L" || key == "half_extent") {
    c.half_extent = detail::parse_double(key, v);
  } else if (key == "alpha" || key == "alphas") {
    c.alphas = detail::parse_list(key, v);
  } else if (key == "omega") {
    const auto w = detail::parse_list(key, v);
    if (w.size() > 3) throw ConfigError("config: omega has too many components");
    c.omega = {0.0, 0.0, 0.0};
    std::copy(w.begin(), w.end(), c.omega.begin());
  } else if (key == "rho_min") {
    c.rho_min = detail::parse_double(key, v);
  } else if (key == "rho_max") {
    c.rho_max = detail::parse_double(key, v);
  } else if (key == "rho_steps") {
    c.rho_steps = static_cast<int>(detail::parse_int(key, v));
  } else if (key == "rho0") {
    c.rho0 = detail::parse_double(key, v);
  } else if (key == "cross_section") {
    c.cross_section = v;
  } else if (key == "b_value") {
    c.b_value = detail::parse_double(key, v);
  } else if (key == "b_slope") {
    c.b_slope = detail::parse_double(key, v);
  } else if (key == "sphere_points") {
    c.sphere_points = static_cast<int>(detail::parse_int(key, v));
  } else if (key == "solver") {
    c.solver = v;
  } else if (key == "tol") {
    c.tol = detail::parse_double(key, v);
  } else if (key == "max_iter") {
    c.max_iter = detail::parse_int(key, v);
  } else if (key == "dt") {
    c.dt = detail::parse_double(key, v);
  } else if (key == "seed") {
    c.seed = static_cast<unsigned>(detail::parse_int(key, v));
  } else if (key == "overlap_threshold") {
    c.overlap_threshold = detail::parse_double(key, v);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

/// "key=value" as given on the command line.
inline void apply_override(RunConfig& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not KEY=VALUE");
  apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
}

inline void load_config_stream(RunConfig& c, std::istream& in, const std::string& origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  RunConfig c;
  load_config_stream(c, in, path.string());
  return c;
}

/// Checks ranges and normalizes omega.
inline void validate(RunConfig& c) {
  if (c.dim != 2 && c.dim != 3) throw ConfigError("d must be 2 or 3");
  if (c.points < 8 || c.points % 2 != 0) throw ConfigError("N must be even and at least 8");
  if (c.half_extent < 0.0) throw ConfigError("L must be positive");
  if (c.alphas.empty()) throw ConfigError("alpha list is empty");
  for (double a : c.alphas)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in (0,1], got " + format_double(a));
  for (int a = c.dim; a < 3; ++a)
    if (c.omega[a] != 0.0) throw ConfigError("omega has more components than d");
  const double on = std::sqrt(norm2(c.omega, c.dim));
  if (!(on > 0.0)) throw ConfigError("omega must be nonzero");
  for (int a = 0; a < c.dim; ++a) c.omega[a] /= on;
  if (c.rho_steps < 1) throw ConfigError("rho_steps must be at least 1");
  if (c.rho_min < 0.0 || c.rho_max < c.rho_min) throw ConfigError("rho range must satisfy 0 <= rho_min <= rho_max");
  if (c.rho_steps > 1 && c.rho_max == c.rho_min) throw ConfigError("rho range is empty");
  if (c.rho0 < 0.0) throw ConfigError("rho0 must be nonnegative");
  if (c.cross_section != "unit-temperature" && c.cross_section != "constant" && c.cross_section != "affine")
    throw ConfigError("cross_section must be unit-temperature, constant or affine");
  if (!(c.b_value > 0.0)) throw ConfigError("b_value must be positive");
  if (c.b_slope < 0.0) throw ConfigError("b_slope must be nonnegative");
  if (c.sphere_points < 0) throw ConfigError("sphere_points must be nonnegative");
  if (c.solver != "newton" && c.solver != "relaxation") throw ConfigError("solver must be newton or relaxation");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.max_iter < 1) throw ConfigError("max_iter must be positive");
  if (c.dt < 0.0) throw ConfigError("dt must be nonnegative");
  if (!(c.overlap_threshold > 0.0 && c.overlap_threshold < 1.0))
    throw ConfigError("overlap_threshold must lie in (0,1)");
}

/// Canonical text used for hashing; independent of key order in the file.
inline std::string canonical(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["d"] = std::to_string(c.dim);
  kv["N"] = std::to_string(c.points);
  kv["L"] = format_double(c.half_extent);
  std::string al;
  for (double a : c.alphas) al += (al.empty() ? "" : ",") + format_double(a);
  kv["alpha"] = al;
  std::string om;
  for (int a = 0; a < c.dim; ++a) om += (a ? "," : "") + format_double(c.omega[a]);
  kv["omega"] = om;
  kv["rho_min"] = format_double(c.rho_min);
  kv["rho_max"] = format_double(c.rho_max);
  kv["rho_steps"] = std::to_string(c.rho_steps);
  kv["rho0"] = format_double(c.rho0);
  kv["cross_section"] = c.cross_section;
  kv["b_value"] = format_double(c.b_value);
  kv["b_slope"] = format_double(c.b_slope);
  kv["sphere_points"] = std::to_string(c.sphere_points);
  kv["solver"] = c.solver;
  kv["tol"] = format_double(c.tol);
  kv["max_iter"] = std::to_string(c.max_iter);
  kv["dt"] = format_double(c.dt);
  kv["seed"] = std::to_string(c.seed);
  kv["overlap_threshold"] = format_double(c.overlap_threshold);
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(canonical(c))); }

inline json config_json(const RunConfig& c) {
  json j;
  std::istringstream is(canonical(c));
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

/// Everything derived from a validated config.
struct Setup {
  RunConfig config;
  GridSpec grid;
  SphereQuadrature quad;
  CrossSection b;
  double t1 = 0.0;
  double rho0 = 0.0;
};

inline Setup make_setup(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  validate(cfg);
  Setup s;
  const int m = cfg.sphere_points > 0 ? cfg.sphere_points : (cfg.dim == 2 ? 16 : 32);
  try {
    s.quad = SphereQuadrature::build(cfg.dim, m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const CrossSection shape = cfg.b_slope > 0.0 ? CrossSection::affine(cfg.b_value, cfg.b_slope)
                                               : CrossSection::constant(cfg.b_value);
  if (cfg.cross_section == "affine" && cfg.b_slope == 0.0) throw ConfigError("affine cross-section needs b_slope > 0");
  if (cfg.cross_section == "constant" && cfg.b_slope > 0.0) throw ConfigError("constant cross-section takes no slope");
  auto resolve = [&](const GridSpec& g) {
    return cfg.cross_section == "unit-temperature" ? unit_temperature_cross_section(g, shape, s.quad) : shape;
  };
  double l = cfg.half_extent;
  if (l == 0.0) {
    const GridSpec probe = build_grid(cfg.dim, 8.0, cfg.points);
    const double t = elastic_temperature(probe, resolve(probe), s.quad);
    l = 8.0 * std::sqrt(std::max(1.0, t));
  }
  s.grid = build_grid(cfg.dim, l, cfg.points);
  s.b = resolve(s.grid);
  s.t1 = elastic_temperature(s.grid, s.b, s.quad);
  s.rho0 = cfg.rho0 > 0.0 ? cfg.rho0 : 0.02 * std::sqrt(s.t1) * (8.0 / l);
  s.config = cfg;
  return s;
}

}  // namespace granular

#pragma once

// Flat key = value run configuration. Lines starting with '#' are comments.
// Unknown keys, invalid values and unreadable files fail with distinct exit codes.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "core.hpp"

namespace landau {

struct RunConfig {
  std::string equilibrium = "poisson";
  std::string spatial_profile = "gaussian";
  double spatial_sigma = 1.0;
  std::string velocity_profile = "poisson";
  double velocity_support = 4.0;
  double amplitude = 1e-3;

  // radial / phase-space grids
  long n_r = 96;
  double r_max = 40.0;
  long n_u = 32;
  long n_l = 16;
  double speed_scale = 1.0;

  // linear theory
  long n_k = 256;
  double k_min = 1e-3;
  double k_max = 20.0;
  long n_speed = 64;
  long n_mu = 32;
  double phase_limit = 40.0;
  double decompose_k = 0.05;

  // time
  double dt = 0.05;
  double t_max = 40.0;
  long output_stride = 10;

  // nonlinear
  std::string mode = "direct";
  bool conserve_mass = true;
  long marker_refine = 2;
  bool corrector = false;
  bool sharpen = true;
  double max_dv = 1.0;
  double tol_picard = 1e-8;
  long max_picard = 12;
  long picard_stride = 20;
  double picard_ds = 0.1;
  bool relax = true;

  // tolerances and diagnostics
  double quad_tol = 1e-9;
  double root_tol = 1e-10;
  double fit_t_min = 10.0;
  double fit_t_max = 0.0;  // 0: use t_max
  double r_ref = 1.0;
  double window = 6.0 * pi;

  long workers = 0;  // 0: LANDAU_WORKERS or 1
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Visits every (key, member) pair; the single source of truth for parse and serialize.
template <class C, class F>
void for_each_key(C& c, F&& f) {
  f("equilibrium", c.equilibrium);
  f("spatial_profile", c.spatial_profile);
  f("spatial_sigma", c.spatial_sigma);
  f("velocity_profile", c.velocity_profile);
  f("velocity_support", c.velocity_support);
  f("amplitude", c.amplitude);
  f("n_r", c.n_r);
  f("r_max", c.r_max);
  f("n_u", c.n_u);
  f("n_l", c.n_l);
  f("speed_scale", c.speed_scale);
  f("n_k", c.n_k);
  f("k_min", c.k_min);
  f("k_max", c.k_max);
  f("n_speed", c.n_speed);
  f("n_mu", c.n_mu);
  f("phase_limit", c.phase_limit);
  f("decompose_k", c.decompose_k);
  f("dt", c.dt);
  f("t_max", c.t_max);
  f("output_stride", c.output_stride);
  f("mode", c.mode);
  f("conserve_mass", c.conserve_mass);
  f("marker_refine", c.marker_refine);
  f("corrector", c.corrector);
  f("sharpen", c.sharpen);
  f("max_dv", c.max_dv);
  f("tol_picard", c.tol_picard);
  f("max_picard", c.max_picard);
  f("picard_stride", c.picard_stride);
  f("picard_ds", c.picard_ds);
  f("relax", c.relax);
  f("quad_tol", c.quad_tol);
  f("root_tol", c.root_tol);
  f("fit_t_min", c.fit_t_min);
  f("fit_t_max", c.fit_t_max);
  f("r_ref", c.r_ref);
  f("window", c.window);
  f("workers", c.workers);
  f("output_dir", c.output_dir);
}

inline void assign(const std::string& key, const std::string& text, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(out))
    throw ConfigError("config: key '" + key + "' expects a number, got '" + text + "'");
}
inline void assign(const std::string& key, const std::string& text, long& out) {
  std::size_t used = 0;
  try {
    out = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("config: key '" + key + "' expects an integer, got '" + text + "'");
}
inline void assign(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") out = true;
  else if (text == "false" || text == "0" || text == "no") out = false;
  else throw ConfigError("config: key '" + key + "' expects true|false, got '" + text + "'");
}
inline void assign(const std::string&, const std::string& text, std::string& out) { out = text; }

inline std::string show(double x) { return format_double(x); }
inline std::string show(long x) { return std::to_string(x); }
inline std::string show(bool x) { return x ? "true" : "false"; }
inline std::string show(const std::string& x) { return x; }

}  // namespace detail

/// Checks the invariants: grid sizes >= 4, dt <= 0.1, eps >= 0, names known.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(c.equilibrium == "poisson" || c.equilibrium == "maxwellian", "equilibrium must be poisson|maxwellian");
  require(c.spatial_profile == "gaussian" || c.spatial_profile == "neutral_gaussian",
          "spatial_profile must be gaussian|neutral_gaussian");
  require(c.velocity_profile == "poisson" || c.velocity_profile == "gaussian" || c.velocity_profile == "compact",
          "velocity_profile must be poisson|gaussian|compact");
  require(c.mode == "direct" || c.mode == "picard", "mode must be direct|picard");
  require(c.n_r >= 4 && c.n_u >= 4 && c.n_l >= 4 && c.n_k >= 4 && c.n_speed >= 4 && c.n_mu >= 4,
          "all grid sizes must be >= 4");
  require(c.marker_refine >= 1 && c.marker_refine <= 8, "marker_refine must lie in [1, 8]");
  require(c.dt > 0.0 && c.dt <= 0.1, "dt must lie in (0, 0.1] to resolve the unit-frequency carrier");
  require(c.t_max > 0.0, "t_max must be positive");
  require(c.amplitude >= 0.0, "amplitude must be nonnegative");
  require(c.spatial_sigma > 0.0 && c.velocity_support > 0.0 && c.r_max > 0.0 && c.speed_scale > 0.0,
          "widths, supports and R_max must be positive");
  require(c.k_min > 0.0 && c.k_max > c.k_min, "k-grid needs 0 < k_min < k_max");
  require(c.decompose_k > 0.0, "decompose_k must be positive");
  require(c.output_stride >= 1 && c.picard_stride >= 1 && c.max_picard >= 1, "strides and max_picard must be >= 1");
  require(c.tol_picard > 0.0 && c.quad_tol > 0.0 && c.root_tol > 0.0, "tolerances must be positive");
  require(c.max_dv > 0.0, "max_dv must be positive");
  require(c.picard_ds >= 0.0 && c.picard_ds <= 0.5, "picard_ds must lie in [0, 0.5]");
  require(c.window > 0.0 && c.r_ref > 0.0 && c.fit_t_min >= 0.0 && c.fit_t_max >= 0.0,
          "diagnostic window, r_ref and fit bounds must be positive");
  require(c.workers >= 0, "workers must be >= 0");
  require(!c.output_dir.empty(), "output_dir must not be empty");
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    bool known = false;
    detail::for_each_key(c, [&](const char* name, auto& member) {
      if (key == name) {
        known = true;
        detail::assign(key, value, member);
      }
    });
    if (!known) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'",
                                  exit_codes::unknown_key);
    if (seen[key]++) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Canonical text form, one key per line in a fixed order.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  detail::for_each_key(const_cast<RunConfig&>(c),
                       [&](const char* name, auto& member) { os << name << " = " << detail::show(member) << "\n"; });
  return os.str();
}

/// FNV-1a hash of the canonical serialization, as 16 hex digits. Runtime-only
/// keys (output_dir, workers) are excluded so relocated runs keep their hash.
inline std::string config_hash(const RunConfig& c) {
  RunConfig k = c;
  k.output_dir = RunConfig{}.output_dir;
  k.workers = 0;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize_config(k)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace landau

#pragma once

// Subcommand drivers: configuration in, artifact files out.

#include <filesystem>
#include <iostream>

#include "config.hpp"
#include "diagnostics.hpp"
#include "dispersion.hpp"
#include "io.hpp"
#include "linresponse.hpp"
#include "nonlinear.hpp"

namespace landau {

inline InitialDatum datum_from(const RunConfig& c) {
  InitialDatum d;
  d.spatial = SpatialProfile::by_name(c.spatial_profile, c.spatial_sigma);
  d.velocity = VelocityProfile::by_name(c.velocity_profile, c.velocity_support);
  d.amplitude = c.amplitude;
  return d;
}

inline NonlinearParams nonlinear_params_from(const RunConfig& c) {
  NonlinearParams p;
  p.n_r = static_cast<std::size_t>(c.n_r);
  p.r_max = c.r_max;
  p.n_u = static_cast<int>(c.n_u);
  p.n_l = static_cast<int>(c.n_l);
  p.speed_scale = c.speed_scale;
  p.dt = c.dt;
  p.t_max = c.t_max;
  p.max_dv = c.max_dv;
  p.conserve_mass = c.conserve_mass;
  p.marker_refine = static_cast<int>(c.marker_refine);
  p.corrector = c.corrector;
  p.sharpen = c.sharpen;
  p.workers = resolve_workers(static_cast<int>(c.workers));
  p.tol_picard = c.tol_picard;
  p.max_picard = static_cast<int>(c.max_picard);
  p.picard_stride = static_cast<int>(c.picard_stride);
  p.picard_ds = c.picard_ds;
  p.relax = c.relax;
  return p;
}

inline std::filesystem::path prepare_output(const RunConfig& c) {
  std::filesystem::path dir(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

inline double fit_upper(const RunConfig& c) { return c.fit_t_max > 0.0 ? c.fit_t_max : c.t_max; }

/// Decay and frequency fits of a field series, recorded without failing the run.
inline nlohmann::json field_fits(const std::vector<double>& t, const std::vector<double>& sup_e,
                                 const std::vector<double>& e_ref, const RunConfig& c) {
  nlohmann::json j;
  try {
    const RateFit f = fit_decay_rate(t, sup_e, c.fit_t_min, fit_upper(c));
    j["field_decay"] = {{"slope", f.slope},         {"slope_stderr", f.slope_stderr}, {"intercept", f.intercept},
                        {"r2", f.r2},               {"t_min", f.t_min},               {"t_max", f.t_max},
                        {"method", "envelope-peaks"}, {"points", f.points},           {"model_mismatch", f.model_mismatch},
                        {"target_slope", -2.0}};
  } catch (const std::exception& e) {
    j["field_decay"] = {{"error", e.what()}};
  }
  try {
    const OscillationFit o = fit_oscillation(t, e_ref, 5.0);
    j["frequency"] = {{"value", o.frequency},
                      {"stderr", o.stderr_},
                      {"mean_zero_spacing", o.mean_spacing},
                      {"crossings", o.crossings},
                      {"r_ref", c.r_ref},
                      {"target", 1.0}};
  } catch (const std::exception& e) {
    j["frequency"] = {{"error", e.what()}};
  }
  return j;
}

inline void write_radial_history(const std::filesystem::path& dir, const std::string& hash, const FieldHistory& h,
                                 std::size_t stride) {
  CsvWriter rho(dir / "rho_rt.csv", hash, {"t", "r", "rho"});
  CsvWriter field(dir / "field_rt.csv", hash, {"t", "r", "e"});
  for (std::size_t n = 0; n <= h.steps(); n += stride)
    for (std::size_t i = 0; i < h.grid.size(); ++i) {
      rho.row({h.time(n), h.grid.r(i), h.rho[n][i]});
      field.row({h.time(n), h.grid.r(i), h.e[n][i]});
    }
}

// ---------------------------------------------------------------------------

inline int run_dispersion(const RunConfig& c) {
  const auto dir = prepare_output(c);
  const std::string hash = config_hash(c);
  const Equilibrium eq = Equilibrium::by_name(c.equilibrium);
  const auto kgrid = log_kgrid(static_cast<std::size_t>(c.n_k), c.k_min, c.k_max);
  std::vector<LandauRoots> roots(kgrid.size());
  parallel_for(kgrid.size(), resolve_workers(static_cast<int>(c.workers)),
               [&](std::size_t i) { roots[i] = landau_roots(eq, kgrid[i], c.root_tol); });
  CsvWriter csv(dir / "dispersion.csv", hash,
                {"k", "re_lambda", "im_lambda", "residual", "re_lambda_minus", "im_lambda_minus", "residual_minus"});
  for (std::size_t i = 0; i < kgrid.size(); ++i)
    csv.row({kgrid[i], roots[i].plus.real(), roots[i].plus.imag(), roots[i].residual_plus, roots[i].minus.real(),
             roots[i].minus.imag(), roots[i].residual_minus});
  write_json(dir / "dispersion_meta.json",
             {{"equilibrium", eq.name()}, {"rows", kgrid.size()}, {"config", config_json(c)},
              {"note", "k = 0 is excluded: the Penrose lower bound fails there"}},
             hash);
  return exit_codes::ok;
}

inline int run_linear(const RunConfig& c) {
  const auto dir = prepare_output(c);
  const std::string hash = config_hash(c);
  const Equilibrium eq = Equilibrium::by_name(c.equilibrium);
  const InitialDatum f0 = datum_from(c);
  const int workers = resolve_workers(static_cast<int>(c.workers));
  const auto kgrid = log_kgrid(static_cast<std::size_t>(c.n_k), c.k_min, c.k_max);
  const LinearRun run = solve_linear(f0, kgrid, c.dt, c.t_max, eq, workers);
  const std::size_t stride = static_cast<std::size_t>(c.output_stride);

  {
    CsvWriter modes(dir / "linear_modes.csv", hash, {"k", "t", "re_rho", "im_rho"});
    for (std::size_t i = 0; i < kgrid.size(); ++i)
      for (std::size_t n = 0; n <= run.n_steps; n += stride)
        modes.row({kgrid[i], run.time(n), run.rho_hat[i][n].real(), run.rho_hat[i][n].imag()});
  }
  std::vector<double> t(run.n_steps + 1), sup_e(run.n_steps + 1), l1(run.n_steps + 1), e_ref(run.n_steps + 1);
  parallel_for(run.n_steps + 1, workers, [&](std::size_t n) {
    t[n] = run.time(n);
    sup_e[n] = run.sup_abs_field(n);
    l1[n] = run.l1_rho(n);
    e_ref[n] = run.field_at(c.r_ref, n);
  });
  {
    CsvWriter field(dir / "linear_field.csv", hash, {"t", "sup_abs_E", "l1_rho", "e_ref"});
    for (std::size_t n = 0; n <= run.n_steps; ++n) field.row({t[n], sup_e[n], l1[n], e_ref[n]});
  }
  {
    const RadialGrid grid(static_cast<std::size_t>(c.n_r), c.r_max);
    FieldHistory h;
    h.grid = grid;
    h.dt = c.dt;
    h.rho.assign(run.n_steps + 1, std::vector<double>(grid.size(), 0.0));
    h.e = h.rho;
    parallel_for(run.n_steps + 1, workers, [&](std::size_t n) {
      if (n % stride) return;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        h.rho[n][i] = run.rho_at(grid.r(i), n);
        h.e[n][i] = run.field_at(grid.r(i), n);
      }
    });
    write_radial_history(dir, hash, h, stride);
  }
  nlohmann::json meta = field_fits(t, sup_e, e_ref, c);
  meta["config"] = config_json(c);
  meta["velocity_weight_sup"] = f0.velocity.weighted_sup();
  std::vector<std::string> warnings = run.warnings;
  if (!std::isfinite(f0.velocity.weighted_sup()))
    warnings.push_back("velocity profile violates the <v>^4.5 weighted bound (reported, not enforced)");
  meta["warnings"] = warnings;
  write_json(dir / "linear_meta.json", meta, hash);
  return exit_codes::ok;
}

inline int run_nonlinear(const RunConfig& c, const std::string& mode) {
  const auto dir = prepare_output(c);
  const std::string hash = config_hash(c);
  const Equilibrium eq = Equilibrium::by_name(c.equilibrium);
  const InitialDatum f0 = datum_from(c);
  const NonlinearParams P = nonlinear_params_from(c);
  nlohmann::json meta;
  meta["config"] = config_json(c);
  meta["mode"] = mode;
  if (mode == "direct") {
    const DirectResult r = run_direct(f0, P, eq);
    write_radial_history(dir, hash, r.history, static_cast<std::size_t>(c.output_stride));
    meta["conservation"] = {{"max_relative_mass_drift", r.max_mass_drift},
                            {"max_relative_drift_before_projection", r.max_raw_drift},
                            {"mass_projection", c.conserve_mass},
                            {"leaked_relative_weight", r.leaked_weight},
                            {"leaked_markers", r.leaked_markers},
                            {"boundary_density_ratio", r.boundary}};
    meta["seconds"] = r.seconds;
    meta["warnings"] = r.warnings;
  } else if (mode == "picard") {
    PicardResult r;
    try {
      r = run_picard(f0, P, eq);
    } catch (const NonConvergenceError& e) {
      write_json(dir / "picard_log.json", {{"converged", false}, {"error", e.what()}, {"distances", e.history()}},
                 hash);
      throw;
    }
    write_radial_history(dir, hash, r.history, static_cast<std::size_t>(c.output_stride));
    nlohmann::json log = nlohmann::json::array();
    for (const auto& it : r.log)
      log.push_back({{"iteration", it.iteration},
                     {"distance", it.distance},
                     {"relative", it.relative},
                     {"ratio", it.ratio},
                     {"relaxed", it.relaxed},
                     {"seconds", it.seconds}});
    write_json(dir / "picard_log.json",
               {{"converged", r.converged},
                {"iterations", r.iterations},
                {"iterates", log},
                {"initialization", "linear solution"},
                {"stopping_rule", "sup |e(n+1) - e(n)| < tol_picard * sup |e(n+1)|"}},
               hash);
    meta["boundary_density_ratio"] = r.boundary;
    meta["seconds"] = r.seconds;
    meta["warnings"] = r.warnings;
  } else {
    throw ConfigError("nonlinear: mode must be direct|picard");
  }
  write_json(dir / "run_meta.json", meta, hash);
  return exit_codes::ok;
}

inline int run_decompose(const RunConfig& c) {
  const auto dir = prepare_output(c);
  const std::string hash = config_hash(c);
  const InitialDatum f0 = datum_from(c);
  const double k = c.decompose_k;
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(c.t_max / c.dt));
  const ModeSeries h = free_streaming_forcing(f0, k, c.dt, n_steps);
  const ModeSeries volterra = apply_resolvent(h);
  const DecompositionPair rep1 = decompose_repI(h);
  const ModeSeries rec1 = rep1.reconstruct(), osc1 = rep1.oscillatory();
  nlohmann::json meta;
  meta["config"] = config_json(c);
  meta["k"] = k;
  meta["labels"] = {{"representation_I", "R = H, T = -i int e^{is} e^{-(t-s)k} H ds"},
                    {"representation_II", "R = int D^2/(1+D^2) f0 e^{-itv.xi} dv, T = e^{-tk} int f0/(1-iD) dv"},
                    {"note", "pure-representation splits; the window-fit split of `rates` is a separate heuristic"}};
  meta["rep_I_vs_volterra"] = max_abs_diff(rec1, volterra) / std::max(1e-300, volterra.sup_abs());
  std::optional<DecompositionPair> rep2;
  try {
    const VelocityQuadrature vq(static_cast<int>(c.n_speed), static_cast<int>(c.n_mu), f0.velocity.natural_map());
    rep2 = decompose_repII(f0, vq, k, c.dt, n_steps);
    meta["rep_II_vs_rep_I"] = max_abs_diff(rep2->reconstruct(), rec1) / std::max(1e-300, volterra.sup_abs());
  } catch (const std::invalid_argument& e) {
    meta["rep_II_refused"] = e.what();
  }
  std::vector<std::string> cols = {"t", "re_R_I", "im_R_I", "re_osc_I", "im_osc_I", "re_rho", "im_rho"};
  if (rep2) cols.insert(cols.end(), {"re_R_II", "im_R_II", "re_osc_II", "im_osc_II"});
  CsvWriter csv(dir / "decompose.csv", hash, cols);
  const ModeSeries osc2 = rep2 ? rep2->oscillatory() : ModeSeries();
  for (std::size_t n = 0; n <= n_steps; n += static_cast<std::size_t>(c.output_stride)) {
    std::vector<double> row = {h.time(n),       rep1.r_part[n].real(), rep1.r_part[n].imag(), osc1[n].real(),
                               osc1[n].imag(),  volterra[n].real(),    volterra[n].imag()};
    if (rep2) row.insert(row.end(), {rep2->r_part[n].real(), rep2->r_part[n].imag(), osc2[n].real(), osc2[n].imag()});
    csv.row(row);
  }
  write_json(dir / "decompose_meta.json", meta, hash);
  return exit_codes::ok;
}

/// Reads rho_rt.csv / field_rt.csv (or linear_field.csv) from `input` and writes
/// rates.json and decomposition.csv into the output directory.
inline int run_rates(const RunConfig& c, const std::filesystem::path& input) {
  const auto dir = prepare_output(c);
  nlohmann::json out;
  std::string hash;
  auto adopt = [&](const CsvTable& t, const std::string& name) {
    if (hash.empty()) hash = t.config_hash;
    else if (t.config_hash != hash) throw IoError("rates: config hash mismatch in " + name);
  };

  std::vector<double> t, sup_e, e_ref;
  if (std::filesystem::exists(input / "linear_field.csv")) {
    const CsvTable lf = read_csv(input / "linear_field.csv");
    adopt(lf, "linear_field.csv");
    const auto ct = lf.column("t"), cs = lf.column("sup_abs_E"), ce = lf.column("e_ref");
    for (const auto& r : lf.rows) {
      t.push_back(r[ct]);
      sup_e.push_back(r[cs]);
      e_ref.push_back(r[ce]);
    }
    out["source"] = "linear_field.csv";
  }

  std::vector<double> ht;
  std::vector<std::vector<double>> rho_rows, e_rows;
  std::vector<double> radii;
  if (std::filesystem::exists(input / "rho_rt.csv") && std::filesystem::exists(input / "field_rt.csv")) {
    const CsvTable rt = read_csv(input / "rho_rt.csv");
    const CsvTable ft = read_csv(input / "field_rt.csv");
    adopt(rt, "rho_rt.csv");
    adopt(ft, "field_rt.csv");
    const auto ct = rt.column("t"), cr = rt.column("r"), cv = rt.column("rho"), fe = ft.column("e");
    for (std::size_t q = 0; q < rt.rows.size(); ++q) {
      const double tt = rt.rows[q][ct];
      if (ht.empty() || tt != ht.back()) {
        ht.push_back(tt);
        rho_rows.emplace_back();
        e_rows.emplace_back();
      }
      if (ht.size() == 1) radii.push_back(rt.rows[q][cr]);
      rho_rows.back().push_back(rt.rows[q][cv]);
      e_rows.back().push_back(ft.rows[q][fe]);
    }
    if (t.empty()) {
      for (std::size_t n = 0; n < ht.size(); ++n) {
        t.push_back(ht[n]);
        double m = 0.0;
        for (double x : e_rows[n]) m = std::max(m, std::abs(x));
        sup_e.push_back(m);
        // linear interpolation of e at r_ref
        double v = 0.0;
        for (std::size_t i = 0; i + 1 < radii.size(); ++i)
          if (radii[i] <= c.r_ref && c.r_ref <= radii[i + 1]) {
            const double w = (c.r_ref - radii[i]) / (radii[i + 1] - radii[i]);
            v = (1.0 - w) * e_rows[n][i] + w * e_rows[n][i + 1];
            break;
          }
        e_ref.push_back(v);
      }
      out["source"] = "field_rt.csv";
    }
  }
  if (t.empty()) throw IoError("rates: no run artifacts found in '" + input.string() + "'");

  nlohmann::json fits = field_fits(t, sup_e, e_ref, c);
  out["field_decay"] = fits["field_decay"];
  out["frequency"] = fits["frequency"];

  if (!rho_rows.empty() && radii.size() >= 4) {
    const RadialGrid grid(radii.size(), radii.back());
    try {
      const StatOscFit fit = fit_stat_osc(ht, rho_rows, c.window);
      CsvWriter csv(dir / "decomposition.csv", hash, {"t", "E_stat_sup", "E_osc_sup", "rho_fit_residual"});
      std::vector<double> tc, es, eo;
      for (const auto& w : fit.windows) {
        std::vector<double> re(grid.size()), im(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
          re[i] = w.c1[i].real();
          im[i] = w.c1[i].imag();
        }
        const auto e0 = radial_poisson(grid, w.c0);
        const auto er = radial_poisson(grid, re), ei = radial_poisson(grid, im);
        double s = 0.0, o = 0.0, res = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          s = std::max(s, std::abs(e0[i]));
          o = std::max(o, std::hypot(er[i], ei[i]));
          res = std::max(res, w.residual[i]);
        }
        const double mid = 0.5 * (w.t_begin + w.t_end);
        csv.row({mid, s, o, res});
        tc.push_back(mid);
        es.push_back(s);
        eo.push_back(o);
      }
      out["decomposition"] = {{"windows", fit.windows.size()},
                              {"window", c.window},
                              {"label", "window-fit split (heuristic counterpart of the static/oscillatory split)"}};
      for (auto [name, series, target] : {std::tuple{"E_stat", &es, -3.0}, std::tuple{"E_osc", &eo, -2.0}}) {
        try {
          const RateFit f = fit_decay_rate(tc, *series, c.fit_t_min, fit_upper(c), FitMethod::AllSamples);
          out["decomposition"][name] = {{"slope", f.slope}, {"r2", f.r2}, {"target_slope", target},
                                        {"model_mismatch", f.model_mismatch}};
        } catch (const std::exception& e) {
          out["decomposition"][name] = {{"error", e.what()}};
        }
      }
    } catch (const std::invalid_argument& e) {
      out["decomposition"] = {{"error", e.what()}};
    }
  }
  write_json(dir / "rates.json", out, hash);
  return exit_codes::ok;
}

}  // namespace landau

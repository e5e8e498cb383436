#pragma once

// Spherically symmetric nonlinear solver for f0(x, v) = eps a(|x|) b(|v|).
//
// Mode D (run_direct): Lagrangian markers at the radial nodes times a velocity
// rule carry phase-space volume; along each marker M0 + f is transported, so the
// perturbation is g = f0(z0) + M0(v0) - M0(v(t)). Density by tent deposition,
// field by the radial Poisson solve, markers pushed in their orbital plane.
//
// Mode P (run_picard): fixed point on the field history. Given e^(n), backward
// characteristics from every node give the forcing N = N1 + N2; the Volterra
// resolvent per sine-transform mode gives rho^(n+1) and e^(n+1).

#include <chrono>
#include <map>

#include "characteristics.hpp"
#include "linresponse.hpp"
#include "radial.hpp"
#include "velocity.hpp"
#include "volterra.hpp"

namespace landau {

struct NonlinearParams {
  std::size_t n_r = 96;
  double r_max = 40.0;
  int n_u = 32;
  int n_l = 16;
  double speed_scale = 1.0;  // L of the algebraic speed map
  double dt = 0.05;
  double t_max = 40.0;
  double max_dv = 1.0;        // per-step velocity increment guard
  bool conserve_mass = true;  // Mode D mass projection
  int marker_refine = 2;      // Mode D markers per velocity node and direction
  bool corrector = false;     // Mode D second push with the predicted end field
  bool sharpen = true;        // Mode D antidiffusive correction of the tent deposit
  int workers = 1;
  // Mode P
  double tol_picard = 1e-8;
  int max_picard = 12;
  int picard_stride = 20;
  double picard_ds = 0.1;  // characteristic step for the correction (0: dt)
  bool relax = true;
  double relax_threshold = 0.9;

  std::size_t n_steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }
};

/// rho(r_i, t_n), e(r_i, t_n), indexed [n][i].
struct FieldHistory {
  RadialGrid grid;
  double dt = 0.05;
  std::vector<std::vector<double>> rho, e;

  std::size_t steps() const { return rho.empty() ? 0 : rho.size() - 1; }
  double time(std::size_t n) const { return n * dt; }
  RadialHistorySampler sampler() const { return RadialHistorySampler(grid, dt, e); }
};

/// Relative L2(r, t) distance, \int\int |a - b|^2 r^2 dr dt / \int\int |b|^2 r^2 dr dt, square-rooted.
inline double relative_l2(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                          const RadialGrid& g) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_l2: time length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = g.r(i) * g.r(i);
      num += w * (a[n][i] - b[n][i]) * (a[n][i] - b[n][i]);
      den += w * b[n][i] * b[n][i];
    }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double l2_rt(const std::vector<std::vector<double>>& a, const RadialGrid& g, double dt) {
  double s = 0.0;
  for (const auto& row : a)
    for (std::size_t i = 0; i < g.size(); ++i) s += g.r(i) * g.r(i) * row[i] * row[i];
  return std::sqrt(4.0 * pi * s * g.dr() * dt);
}

/// Largest |rho| next to the outer boundary relative to the peak over the run.
inline double boundary_ratio(const FieldHistory& h) {
  double peak = 0.0, edge = 0.0;
  for (const auto& row : h.rho) {
    for (double x : row) peak = std::max(peak, std::abs(x));
    edge = std::max(edge, std::abs(row[row.size() - 2]));
  }
  return peak > 0.0 ? edge / peak : 0.0;
}

// ---------------------------------------------------------------------------
// Mode D.

struct DirectResult {
  FieldHistory history;
  std::vector<double> mass;          // perturbation mass in the ball plus what crossed R_max, per step
  double abs_mass0 = 0.0;            // \int\int |f0|
  double max_mass_drift = 0.0;       // max_t |mass - mass(0)| / abs_mass0
  double max_raw_drift = 0.0;        // the same before the conservation projection
  double leaked_weight = 0.0;        // sum w |g| handed to the boundary shell, relative to abs_mass0
  std::size_t leaked_markers = 0;
  double boundary = 0.0;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

namespace detail {

/// Density of the datum transported by free flight, eps a^(k) b^(t k), brought back
/// to the radial nodes by a Gauss-Legendre k quadrature. Also the charge it keeps
/// inside R_max, so the part that streamed out can be booked as absorbed.
class FreeFlightDensity {
 public:
  FreeFlightDensity(const InitialDatum& f0, const RadialGrid& grid, int panels = 64) : f0_(f0), grid_(grid) {
    const double k_cut = 13.0 / f0.spatial.sigma;
    const auto gl = quad::gauss_legendre(16);
    const double w = k_cut / panels;
    for (int p = 0; p < panels; ++p)
      for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
        const double k = p * w + 0.5 * w * (gl.nodes[j] + 1.0);
        k_.push_back(k);
        a_.push_back(0.5 * w * gl.weights[j] * f0.amplitude * f0.spatial.transform(k));
      }
    kernel_.assign(grid.size(), std::vector<double>(k_.size()));
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t q = 0; q < k_.size(); ++q)
        kernel_[i][q] = k_[q] * k_[q] * sinc(k_[q] * grid.r(i)) / (2.0 * pi * pi);
    const double R = grid.r_max();
    for (double k : k_) inside_.push_back(2.0 / pi * sin_minus_xcos(k * R) / k);
  }

  std::vector<double> density(double t, double* inside_charge) const {
    std::vector<double> c(k_.size());
    for (std::size_t q = 0; q < k_.size(); ++q) c[q] = a_[q] * f0_.velocity.transform(t * k_[q]);
    std::vector<double> rho(grid_.size(), 0.0);
    for (std::size_t i = 0; i < grid_.size(); ++i)
      for (std::size_t q = 0; q < k_.size(); ++q) rho[i] += kernel_[i][q] * c[q];
    if (inside_charge) {
      double s = 0.0;
      for (std::size_t q = 0; q < k_.size(); ++q) s += inside_[q] * c[q];
      *inside_charge = s;
    }
    return rho;
  }

 private:
  InitialDatum f0_;
  RadialGrid grid_;
  std::vector<double> k_, a_, inside_;
  std::vector<std::vector<double>> kernel_;
};

struct Markers {
  std::vector<double> qx, qy, px, py;  // orbital-plane position and velocity
  std::vector<double> r0, u0x, u0y;    // start node and velocity: the free-flight copy
  std::vector<double> w, g0, m0;       // volume weight, eps f0 at the start, M0 at the start
  std::vector<double> g;               // current perturbation value
  std::vector<char> ghost;             // free-flight copy still inside R_max
  double absorbed = 0.0;      // net charge handed to the boundary shell
  double absorbed_abs = 0.0;  // same, in absolute value
  std::size_t crossings = 0;
  std::size_t size() const { return w.size(); }
};

/// Each velocity node p gets its own radial lattice r = (i + theta_p) dr with
/// theta_p from the golden-ratio sequence and weight 4 pi r^2 dr w_p, so markers of
/// different velocities do not share start radii.
inline Markers seed_markers(const RadialGrid& grid, const VelocityQuadrature& vq, const InitialDatum& f0,
                            const Equilibrium& eq) {
  Markers m;
  const double h = grid.dr();
  for (std::size_t q = 0; q < vq.size(); ++q) {
    const auto& n = vq.nodes()[q];
    const double theta = std::fmod((q + 0.5) * 0.6180339887498949, 1.0);
    const double tangential = n.speed * std::sqrt(std::max(0.0, 1.0 - n.mu * n.mu));
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double r = (i + theta) * h;
      m.qx.push_back(r);
      m.qy.push_back(0.0);
      m.px.push_back(n.speed * n.mu);
      m.py.push_back(tangential);
      m.r0.push_back(r);
      m.u0x.push_back(n.speed * n.mu);
      m.u0y.push_back(tangential);
      m.w.push_back(4.0 * pi * r * r * h * n.weight);
      const double g0 = f0.value(r, n.speed);
      m.g0.push_back(g0);
      m.m0.push_back(eq.radial(n.speed));
      m.g.push_back(g0);
      m.ghost.push_back(1);
    }
  }
  return m;
}

/// Tent deposition of sum_p w_p [g_p delta(X_p) - g0_p delta(X_p^free(t))], the
/// markers' share on top of the exact free-flight density, divided by the tent
/// volumes. Per-worker buffers are merged in worker order.
///
/// The wall node gets nothing: in the outer cell the share that would go there is
/// returned in `wall` instead. A marker's deposit then fades to zero as it reaches
/// R_max, where its value is dropped, so the density does not jump when a marker
/// crosses one step earlier or later.
inline std::vector<double> deposit(const RadialGrid& grid, const Markers& m, double t, int workers,
                                   double* wall = nullptr) {
  const std::size_t N = grid.size();
  workers = std::max(1, workers);
  std::vector<std::vector<double>> acc(workers, std::vector<double>(N + 1, 0.0));  // slot N: wall layer
  auto put = [&](std::vector<double>& a, double r, double q) {
    if (r >= grid.r_max()) return;
    const double x = r / grid.dr();
    const std::size_t j = std::min(static_cast<std::size_t>(x), N - 2);
    const double f = x - j;
    a[j] += q * (1.0 - f);
    a[j + 1 == N - 1 ? N : j + 1] += q * f;
  };
  parallel_blocks(m.size(), workers, [&](std::size_t b, std::size_t e, int wk) {
    auto& a = acc[wk];
    for (std::size_t p = b; p < e; ++p) {
      put(a, std::hypot(m.qx[p], m.qy[p]), m.w[p] * m.g[p]);
      if (m.ghost[p]) put(a, std::hypot(m.r0[p] + t * m.u0x[p], t * m.u0y[p]), -m.w[p] * m.g0[p]);
    }
  });
  std::vector<double> charge(N + 1, 0.0);
  for (int wk = 0; wk < workers; ++wk)
    for (std::size_t i = 0; i <= N; ++i) charge[i] += acc[wk][i];
  if (wall) *wall = charge[N];
  charge.pop_back();
  for (std::size_t i = 0; i < N; ++i) charge[i] /= grid.tent_volume(i);
  return charge;
}

/// One antidiffusive step against the tent average: rho = D + V^{-1}(V - M) D with
/// M the consistent r^2-weighted tent mass matrix and V its row sums (the tent
/// volumes). Removes the O(dr^2) smoothing of the lumped deposit and keeps
/// sum_i V_i rho_i, the total charge, unchanged.
class TentSharpener {
 public:
  explicit TentSharpener(const RadialGrid& g) : diag_(g.size(), 0.0), off_(g.size() - 1, 0.0), vol_(g.size()) {
    const quad::Rule& rule = quad::gauss_legendre(3);
    const double h = g.dr();
    for (std::size_t j = 0; j + 1 < g.size(); ++j)
      for (int q = 0; q < 3; ++q) {
        const double x = 0.5 * (1.0 + rule.nodes[q]);
        const double r = g.r(j) + x * h;
        const double w = 0.5 * rule.weights[q] * h * 4.0 * pi * r * r;
        diag_[j] += w * (1.0 - x) * (1.0 - x);
        diag_[j + 1] += w * x * x;
        off_[j] += w * x * (1.0 - x);
      }
    for (std::size_t i = 0; i < g.size(); ++i) vol_[i] = g.tent_volume(i);
  }

  std::vector<double> apply(const std::vector<double>& d) const {
    const std::size_t n = d.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double md = diag_[i] * d[i];
      if (i > 0) md += off_[i - 1] * d[i - 1];
      if (i + 1 < n) md += off_[i] * d[i + 1];
      out[i] = d[i] + (vol_[i] * d[i] - md) / vol_[i];
    }
    return out;
  }

 private:
  std::vector<double> diag_, off_, vol_;
};

/// Lagrange weights of the nodes theta = -1, 0, 1 at theta.
inline std::array<double, 3> lagrange3(double th) {
  return {0.5 * th * (th - 1.0), (1.0 - th) * (1.0 + th), 0.5 * th * (th + 1.0)};
}

}  // namespace detail

inline DirectResult run_direct(const InitialDatum& f0, const NonlinearParams& P,
                               const Equilibrium& eq = Equilibrium::poisson()) {
  const auto clock0 = std::chrono::steady_clock::now();
  const RadialGrid grid(P.n_r, P.r_max);
  const int refine = std::max(1, P.marker_refine);
  const VelocityQuadrature vq(P.n_u * refine, P.n_l * refine, SpeedMap::algebraic(P.speed_scale));
  const std::size_t N = grid.size(), n_steps = P.n_steps();
  const double dt = P.dt, R = grid.r_max();
  const int workers = resolve_workers(P.workers);

  detail::Markers m = detail::seed_markers(grid, vq, f0, eq);
  const detail::FreeFlightDensity free_flight(f0, grid);
  const detail::TentSharpener sharpener(grid);
  DirectResult out;
  out.history.grid = grid;
  out.history.dt = dt;
  out.abs_mass0 = f0.total_abs_mass();

  // Mass: the free-flight part is booked by its exact charge (inside the ball plus
  // what streamed out, constant over R^3), the markers' share by their deposit
  // including the wall layer.
  double free_inside0 = 0.0, free_inside = 0.0, share_mass = 0.0;
  auto density = [&](double t) {
    std::vector<double> rho = free_flight.density(t, &free_inside);
    std::vector<double> share = detail::deposit(grid, m, t, workers, &share_mass);
    if (P.sharpen) share = sharpener.apply(share);
    for (std::size_t i = 0; i < N; ++i) {
      rho[i] += share[i];
      share_mass += share[i] * grid.tent_volume(i);
    }
    return rho;
  };
  auto total_mass = [&]() { return free_inside + (free_inside0 - free_inside) + share_mass + m.absorbed; };

  std::vector<double> rho = free_flight.density(0.0, &free_inside0);
  free_inside = free_inside0;
  std::vector<double> e = radial_poisson(grid, rho);
  const double mass0 = total_mass();
  out.history.rho.push_back(rho);
  out.history.e.push_back(e);
  out.mass.push_back(mass0);

  // Markers past R_max hand their value to the boundary shell and re-enter as
  // unperturbed equilibrium inflow (mirrored position, reversed radial velocity).
  // M0 is isotropic, so the reflected marker carries the right background weight.
  // Free-flight copies that leave the ball take -w g0 with them.
  auto cross_boundary = [&](double t) {
    for (std::size_t p = 0; p < m.size(); ++p) {
      if (m.ghost[p] && std::hypot(m.r0[p] + t * m.u0x[p], t * m.u0y[p]) >= R) {
        m.ghost[p] = 0;
        m.absorbed -= m.w[p] * m.g0[p];
      }
      const double r = std::hypot(m.qx[p], m.qy[p]);
      if (r < R) continue;
      m.absorbed += m.w[p] * m.g[p];
      m.absorbed_abs += m.w[p] * std::abs(m.g[p]);
      ++m.crossings;
      if (m.ghost[p]) {
        m.ghost[p] = 0;
        m.absorbed -= m.w[p] * m.g0[p];
      }
      const double nx = m.qx[p] / r, ny = m.qy[p] / r;
      const double vr = m.px[p] * nx + m.py[p] * ny;
      const double rr = std::max(0.0, 2.0 * R - r);
      m.qx[p] = rr * nx;
      m.qy[p] = rr * ny;
      if (vr > 0.0) {
        m.px[p] -= 2.0 * vr * nx;
        m.py[p] -= 2.0 * vr * ny;
      }
      m.g0[p] = 0.0;
      m.m0[p] = eq.radial(std::hypot(m.px[p], m.py[p]));
      m.g[p] = 0.0;
    }
  };

  // g = eps f0(z0) + M0(v0) - M0(v). The markers' share of the mass,
  // sum w g - sum_{copies inside} w g0 plus what went to the boundary, starts at
  // zero. The optional projection removes its quadrature defect in proportion to |g - g0|.
  auto update_values = [&](double t, bool project) -> double {
    parallel_for(m.size(), workers, [&](std::size_t p) {
      m.g[p] = m.g0[p] + m.m0[p] - eq.radial(std::hypot(m.px[p], m.py[p]));
    });
    cross_boundary(t);
    double defect = m.absorbed, spread = 0.0;
    for (std::size_t p = 0; p < m.size(); ++p) {
      defect += m.w[p] * (m.g[p] - (m.ghost[p] ? m.g0[p] : 0.0));
      spread += m.w[p] * std::abs(m.g[p] - m.g0[p]);
    }
    if (project && spread > 0.0) {
      const double c = defect / spread;
      for (std::size_t p = 0; p < m.size(); ++p) m.g[p] -= c * std::abs(m.g[p] - m.g0[p]);
    }
    return defect;
  };

  std::vector<double> e_prev = e;  // e_{n-1}
  detail::Markers saved;

  // Pushes every marker one step through fields at the three RK4 stage times.
  auto push = [&](const std::array<const std::vector<double>*, 3>& stage) {
    std::atomic<bool> blown{false};
    parallel_for(m.size(), workers, [&](std::size_t p) {
      auto acc = [&](const std::vector<double>& ef, double x, double y, double& ax, double& ay) {
        const double r = std::hypot(x, y);
        if (r == 0.0 || r >= R) {
          ax = ay = 0.0;
          return;
        }
        const double s = grid.interpolate(ef, r) / r;
        ax = s * x;
        ay = s * y;
      };
      const double x0 = m.qx[p], y0 = m.qy[p], u0 = m.px[p], w0 = m.py[p];
      double a1x, a1y, a2x, a2y, a3x, a3y, a4x, a4y;
      acc(*stage[0], x0, y0, a1x, a1y);
      const double x2 = x0 + 0.5 * dt * u0, y2 = y0 + 0.5 * dt * w0;
      const double u2 = u0 + 0.5 * dt * a1x, w2 = w0 + 0.5 * dt * a1y;
      acc(*stage[1], x2, y2, a2x, a2y);
      const double x3 = x0 + 0.5 * dt * u2, y3 = y0 + 0.5 * dt * w2;
      const double u3 = u0 + 0.5 * dt * a2x, w3 = w0 + 0.5 * dt * a2y;
      acc(*stage[1], x3, y3, a3x, a3y);
      const double x4 = x0 + dt * u3, y4 = y0 + dt * w3;
      const double u4 = u0 + dt * a3x, w4 = w0 + dt * a3y;
      acc(*stage[2], x4, y4, a4x, a4y);
      const double du = dt / 6.0 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x);
      const double dw = dt / 6.0 * (a1y + 2.0 * a2y + 2.0 * a3y + a4y);
      if (!(std::hypot(du, dw) <= P.max_dv)) blown = true;
      m.qx[p] = x0 + dt / 6.0 * (u0 + 2.0 * u2 + 2.0 * u3 + u4);
      m.qy[p] = y0 + dt / 6.0 * (w0 + 2.0 * w2 + 2.0 * w3 + w4);
      m.px[p] = u0 + du;
      m.py[p] = w0 + dw;
    });
    if (blown) throw BlowUpError("run_direct: marker velocity increment exceeds the blow-up guard");
  };

  auto combine = [&](const std::array<double, 3>& c, const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& d) {
    std::vector<double> r(N);
    for (std::size_t i = 0; i < N; ++i) r[i] = c[0] * a[i] + c[1] * b[i] + c[2] * d[i];
    return r;
  };

  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t1 = (n + 1) * dt;
    if (P.corrector) saved = m;

    // predictor: linear extrapolation from e_{n-1}, e_n
    const std::vector<double> pred_half = combine({-0.5, 1.5, 0.0}, e_prev, e, e);
    const std::vector<double> pred_end = combine({-1.0, 2.0, 0.0}, e_prev, e, e);
    push({&e, &pred_half, &pred_end});
    double raw = update_values(t1, P.conserve_mass);
    if (P.corrector) {
      // quadratic through e_{n-1}, e_n, e*_{n+1} (linear on the first step)
      const std::vector<double> e_star = radial_poisson(grid, density(t1));
      m = saved;
      const std::vector<double> corr_half =
          n == 0 ? combine({0.0, 0.5, 0.5}, e_prev, e, e_star) : combine(detail::lagrange3(0.5), e_prev, e, e_star);
      push({&e, &corr_half, &e_star});
      raw = update_values(t1, P.conserve_mass);
    }
    out.max_raw_drift = std::max(out.max_raw_drift, std::abs(raw) / out.abs_mass0);

    rho = density(t1);
    for (double x : rho)
      if (!std::isfinite(x)) throw BlowUpError("run_direct: non-finite density");
    e_prev = e;
    e = radial_poisson(grid, rho);
    const double mass = total_mass();
    out.mass.push_back(mass);
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(mass - mass0) / out.abs_mass0);
    out.history.rho.push_back(rho);
    out.history.e.push_back(e);
  }

  out.leaked_markers = m.crossings;
  out.leaked_weight = m.absorbed_abs / out.abs_mass0;
  if (out.leaked_markers > 0)
    out.warnings.push_back("run_direct: " + std::to_string(out.leaked_markers) +
                           " boundary crossings absorbed at R_max, relative weight " +
                           std::to_string(out.leaked_weight));
  out.boundary = boundary_ratio(out.history);
  if (out.boundary > 1e-8)
    out.warnings.push_back("run_direct: boundary density ratio " + std::to_string(out.boundary) + " exceeds 1e-8");
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Forcing N = N1 + N2 from backward characteristics.

/// N on the radial grid at one output time. N1 is split into the free-streaming
/// part (evaluated spectrally by the caller) and the deviation correction.
struct ForcingSample {
  double t = 0.0;
  std::vector<double> n1_free;        // node quadrature of \int f0(x - t v, v) dv
  std::vector<double> n1_correction;  // \int [f0(X0, V0) - f0(x - t v, v)] dv
  std::vector<double> n2;             // reaction term
  std::vector<double> n2_free;        // \int_0^t \int E(x - (t-s) v, s).M0'(v) dv ds on the same nodes

  std::vector<double> n1() const {
    std::vector<double> r(n1_free.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = n1_free[i] + n1_correction[i];
    return r;
  }
};

/// Backward characteristics from (r_i, v) at time t for every node of `vq`,
/// integrated in the orbital plane with step `ds` through the radial field `e(r, s)`.
template <class RadialFn>
ForcingSample assemble_forcing_N(const RadialFn& e, const RadialGrid& grid, const VelocityQuadrature& vq,
                                 const InitialDatum& f0, double t, double ds,
                                 const Equilibrium& eq = Equilibrium::poisson(), int workers = 1,
                                 double max_dv = std::numeric_limits<double>::infinity()) {
  const std::size_t N = grid.size();
  ForcingSample out;
  out.t = t;
  out.n1_free.assign(N, 0.0);
  out.n1_correction.assign(N, 0.0);
  out.n2.assign(N, 0.0);
  out.n2_free.assign(N, 0.0);
  const std::size_t steps = t > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / ds))) : 0;
  const double h = steps ? -t / steps : 0.0;
  std::atomic<bool> blown{false};

  parallel_for(N, workers, [&](std::size_t i) {
    const double r0 = grid.r(i);
    double n1f = 0.0, n1c = 0.0, n2 = 0.0, n2f = 0.0;
    for (const auto& node : vq.nodes()) {
      const double vx = node.speed * node.mu;
      const double vy = node.speed * std::sqrt(std::max(0.0, 1.0 - node.mu * node.mu));
      const double dm_free = eq.radial_derivative(node.speed);
      // E(x, s).M0'(v) = e(|x|, s) M0'(|v|) (x.v) / (|x||v|)
      auto edot = [&](double x, double y, double u, double w, double s, double dm) {
        const double r = std::hypot(x, y), sp = std::hypot(u, w);
        if (r == 0.0 || sp == 0.0) return 0.0;
        return e(r, s) * dm * (x * u + y * w) / (r * sp);
      };
      auto integrand = [&](double x, double y, double u, double w, double s, double& traj, double& freeterm) {
        traj = edot(x, y, u, w, s, eq.radial_derivative(std::hypot(u, w)));
        const double fx = r0 - (t - s) * vx, fy = -(t - s) * vy;
        freeterm = edot(fx, fy, vx, vy, s, dm_free);
      };
      double x = r0, y = 0.0, u = vx, w = vy;
      double I_traj = 0.0, I_free = 0.0;
      for (std::size_t j = 0; j < steps; ++j) {
        const double s = t + j * h;
        auto acc = [&](double px, double py, double ss, double& ax, double& ay) {
          const double r = std::hypot(px, py);
          if (r == 0.0) {
            ax = ay = 0.0;
            return;
          }
          const double c = e(r, ss) / r;
          ax = c * px;
          ay = c * py;
        };
        double a1x, a1y, a2x, a2y, a3x, a3y, a4x, a4y, t1, f1, t2, f2, t3, f3, t4, f4;
        acc(x, y, s, a1x, a1y);
        integrand(x, y, u, w, s, t1, f1);
        const double x2 = x + 0.5 * h * u, y2 = y + 0.5 * h * w, u2 = u + 0.5 * h * a1x, w2 = w + 0.5 * h * a1y;
        acc(x2, y2, s + 0.5 * h, a2x, a2y);
        integrand(x2, y2, u2, w2, s + 0.5 * h, t2, f2);
        const double x3 = x + 0.5 * h * u2, y3 = y + 0.5 * h * w2, u3 = u + 0.5 * h * a2x, w3 = w + 0.5 * h * a2y;
        acc(x3, y3, s + 0.5 * h, a3x, a3y);
        integrand(x3, y3, u3, w3, s + 0.5 * h, t3, f3);
        const double x4 = x + h * u3, y4 = y + h * w3, u4 = u + h * a3x, w4 = w + h * a3y;
        acc(x4, y4, s + h, a4x, a4y);
        integrand(x4, y4, u4, w4, s + h, t4, f4);
        const double du = h / 6.0 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x);
        const double dw = h / 6.0 * (a1y + 2.0 * a2y + 2.0 * a3y + a4y);
        if (!(std::hypot(du, dw) <= max_dv)) blown = true;
        x += h / 6.0 * (u + 2.0 * u2 + 2.0 * u3 + u4);
        y += h / 6.0 * (w + 2.0 * w2 + 2.0 * w3 + w4);
        u += du;
        w += dw;
        // h < 0: \int_0^t = -(sum of h-weighted stages)
        I_traj -= h / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4);
        I_free -= h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
      }
      const double fx = r0 - t * vx, fy = -t * vy;
      const double free_val = f0.value(std::hypot(fx, fy), node.speed);
      const double foot_val = f0.value(std::hypot(x, y), std::hypot(u, w));
      n1f += node.weight * free_val;
      n1c += node.weight * (foot_val - free_val);
      n2 += node.weight * (I_free - I_traj);
      n2f += node.weight * I_free;
    }
    out.n1_free[i] = n1f;
    out.n1_correction[i] = n1c;
    out.n2[i] = n2;
    out.n2_free[i] = n2f;
  });
  if (blown) throw BlowUpError("assemble_forcing_N: velocity increment exceeds the blow-up guard");
  return out;
}

// ---------------------------------------------------------------------------
// Mode P.

struct PicardIterate {
  int iteration = 0;
  double distance = 0.0;  // sup_{r,t} |e^(n+1) - e^(n)|
  double relative = 0.0;  // distance / sup |e^(n+1)|
  double ratio = 0.0;     // distance / previous distance
  bool relaxed = false;
  double seconds = 0.0;
};

struct PicardResult {
  FieldHistory history;
  FieldHistory linear;  // the n = 0 iterate
  std::vector<PicardIterate> log;
  int iterations = 0;
  bool converged = false;
  double boundary = 0.0;
  std::vector<std::string> warnings;
  double seconds = 0.0;
  // spectral data of the final iterate, for the Volterra consistency check
  std::vector<double> kgrid;
  std::vector<ModeSeries> rho_hat, forcing_hat;
};

namespace detail {

/// Cubic Lagrange interpolation of samples at t = stride_times onto every step.
inline std::vector<std::vector<double>> interpolate_in_time(const std::vector<double>& ts,
                                                            const std::vector<std::vector<double>>& vals,
                                                            double dt, std::size_t n_steps) {
  const std::size_t M = ts.size(), N = vals.front().size();
  std::vector<std::vector<double>> out(n_steps + 1, std::vector<double>(N, 0.0));
  for (std::size_t n = 0; n <= n_steps; ++n) {
    const double t = n * dt;
    std::size_t j = 0;
    while (j + 1 < M && ts[j + 1] <= t) ++j;
    if (M < 4) {
      const std::size_t a = std::min(j, M - 2);
      const double w = (t - ts[a]) / (ts[a + 1] - ts[a]);
      for (std::size_t i = 0; i < N; ++i) out[n][i] = (1.0 - w) * vals[a][i] + w * vals[a + 1][i];
      continue;
    }
    std::size_t a = j == 0 ? 0 : j - 1;
    a = std::min(a, M - 4);
    double c[4];
    for (int q = 0; q < 4; ++q) {
      c[q] = 1.0;
      for (int r = 0; r < 4; ++r)
        if (r != q) c[q] *= (t - ts[a + r]) / (ts[a + q] - ts[a + r]);
    }
    for (std::size_t i = 0; i < N; ++i)
      out[n][i] = c[0] * vals[a][i] + c[1] * vals[a + 1][i] + c[2] * vals[a + 2][i] + c[3] * vals[a + 3][i];
  }
  return out;
}

/// Correction (N1 deviation + N2) history -> rho, e through the per-mode resolvent.
struct PicardKernel {
  const RadialGrid& grid;
  const RadialTransform& tf;
  const InitialDatum& f0;
  double dt;
  std::size_t n_steps;
  int workers;
  std::vector<double> a_hat;  // sine transform of the sampled spatial profile

  void solve(const std::vector<std::vector<double>>& correction, FieldHistory& out, std::vector<ModeSeries>* rho_hat,
             std::vector<ModeSeries>* forcing_hat) const {
    const auto& k = tf.frequencies();
    const std::size_t M = k.size();
    std::vector<std::vector<double>> corr_hat(n_steps + 1);
    parallel_for(n_steps + 1, workers, [&](std::size_t n) { corr_hat[n] = tf.forward(correction[n]); });
    std::vector<std::vector<double>> rho_modes(M);
    if (rho_hat) rho_hat->assign(M, ModeSeries());
    if (forcing_hat) forcing_hat->assign(M, ModeSeries());
    parallel_for(M, workers, [&](std::size_t j) {
      std::vector<cplx> h(n_steps + 1);
      for (std::size_t n = 0; n <= n_steps; ++n)
        h[n] = f0.amplitude * a_hat[j] * f0.velocity.transform(n * dt * k[j]) + corr_hat[n][j];
      ModeSeries H(k[j], dt, std::move(h));
      ModeSeries rho = apply_resolvent(H);
      rho_modes[j].resize(n_steps + 1);
      for (std::size_t n = 0; n <= n_steps; ++n) rho_modes[j][n] = rho[n].real();
      if (rho_hat) (*rho_hat)[j] = rho;
      if (forcing_hat) (*forcing_hat)[j] = H;
    });
    out.grid = grid;
    out.dt = dt;
    out.rho.assign(n_steps + 1, {});
    out.e.assign(n_steps + 1, {});
    parallel_for(n_steps + 1, workers, [&](std::size_t n) {
      std::vector<double> fh(M);
      for (std::size_t j = 0; j < M; ++j) fh[j] = rho_modes[j][n];
      out.rho[n] = tf.inverse(fh);
      out.e[n] = radial_poisson(grid, out.rho[n]);
    });
  }
};

inline double sup_diff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    for (std::size_t i = 0; i < a[n].size(); ++i) m = std::max(m, std::abs(a[n][i] - b[n][i]));
  return m;
}
inline double sup_abs(const std::vector<std::vector<double>>& a) {
  double m = 0.0;
  for (const auto& row : a)
    for (double x : row) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Stride times 0, stride dt, ..., always including t_max.
inline std::vector<double> picard_sample_times(const NonlinearParams& P) {
  const std::size_t n_steps = P.n_steps();
  const std::size_t stride = std::max(1, P.picard_stride);
  std::vector<double> ts;
  for (std::size_t n = 0; n <= n_steps; n += stride) ts.push_back(n * P.dt);
  if (std::abs(ts.back() - n_steps * P.dt) > 1e-12) ts.push_back(n_steps * P.dt);
  return ts;
}

/// Correction history for one field iterate: (N1 - free streaming) + N2 at the
/// stride times, interpolated onto every step.
inline std::vector<std::vector<double>> picard_correction(const FieldHistory& field, const InitialDatum& f0,
                                                          const NonlinearParams& P, const VelocityQuadrature& vq,
                                                          const Equilibrium& eq, int workers) {
  const RadialHistorySampler sampler = field.sampler();
  auto e = [&](double r, double s) { return sampler.radial(r, s); };
  const auto ts = picard_sample_times(P);
  std::vector<std::vector<double>> vals(ts.size());
  for (std::size_t m = 0; m < ts.size(); ++m) {
    if (ts[m] == 0.0) {
      vals[m].assign(field.grid.size(), 0.0);
      continue;
    }
    // the correction is O(eps) against the linear field, so a coarser step suffices
    const double ds = P.picard_ds > 0.0 ? P.picard_ds : P.dt;
    const ForcingSample fs = assemble_forcing_N(e, field.grid, vq, f0, ts[m], ds, eq, workers, P.max_dv * ds / P.dt);
    vals[m].resize(field.grid.size());
    for (std::size_t i = 0; i < vals[m].size(); ++i) vals[m][i] = fs.n1_correction[i] + fs.n2[i];
  }
  return detail::interpolate_in_time(ts, vals, P.dt, P.n_steps());
}

inline PicardResult run_picard(const InitialDatum& f0, const NonlinearParams& P,
                               const Equilibrium& eq = Equilibrium::poisson()) {
  if (!eq.is_poisson()) throw std::invalid_argument("run_picard: the resolvent path requires the Poisson equilibrium");
  const auto clock0 = std::chrono::steady_clock::now();
  const RadialGrid grid(P.n_r, P.r_max);
  const RadialTransform tf(grid);
  const VelocityQuadrature vq(P.n_u, P.n_l, SpeedMap::algebraic(P.speed_scale));
  const int workers = resolve_workers(P.workers);
  const std::size_t n_steps = P.n_steps();

  std::vector<double> a_samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) a_samples[i] = f0.spatial.value(grid.r(i));
  detail::PicardKernel kernel{grid, tf, f0, P.dt, n_steps, workers, tf.forward(a_samples)};

  PicardResult out;
  std::vector<std::vector<double>> zero(n_steps + 1, std::vector<double>(grid.size(), 0.0));
  kernel.solve(zero, out.linear, nullptr, nullptr);
  FieldHistory current = out.linear;

  double prev_distance = 0.0;
  int growth = 0;
  for (int it = 1; it <= P.max_picard; ++it) {
    const auto t_it = std::chrono::steady_clock::now();
    const auto corr = picard_correction(current, f0, P, vq, eq, workers);
    FieldHistory next;
    kernel.solve(corr, next, &out.rho_hat, &out.forcing_hat);
    PicardIterate rec;
    rec.iteration = it;
    rec.distance = detail::sup_diff(next.e, current.e);
    const double scale = detail::sup_abs(next.e);
    rec.relative = scale > 0.0 ? rec.distance / scale : 0.0;
    rec.ratio = (it > 1 && prev_distance > 0.0) ? rec.distance / prev_distance : 0.0;
    if (it > 1 && rec.ratio > 1.0) {
      if (++growth >= 2) {
        out.log.push_back(rec);
        std::vector<double> hist;
        for (const auto& l : out.log) hist.push_back(l.distance);
        throw NonConvergenceError("run_picard: iterate distance grows; amplitude outside the perturbative regime",
                                  hist);
      }
    } else {
      growth = 0;
    }
    if (P.relax && it > 1 && rec.ratio > P.relax_threshold) {
      rec.relaxed = true;
      for (std::size_t n = 0; n <= n_steps; ++n)
        for (std::size_t i = 0; i < grid.size(); ++i) {
          next.e[n][i] = 0.5 * (next.e[n][i] + current.e[n][i]);
          next.rho[n][i] = 0.5 * (next.rho[n][i] + current.rho[n][i]);
        }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_it).count();
    out.log.push_back(rec);
    prev_distance = rec.distance;
    current = std::move(next);
    out.iterations = it;
    if (rec.distance == 0.0 || rec.relative < P.tol_picard) {
      out.converged = true;
      break;
    }
  }
  out.history = std::move(current);
  out.kgrid = tf.frequencies();
  out.boundary = boundary_ratio(out.history);
  if (out.boundary > 1e-8)
    out.warnings.push_back("run_picard: boundary density ratio " + std::to_string(out.boundary) + " exceeds 1e-8");
  if (!out.converged) {
    std::vector<double> hist;
    for (const auto& l : out.log) hist.push_back(l.distance);
    throw NonConvergenceError("run_picard: no convergence within max_picard iterations", hist);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return out;
}

}  // namespace landau

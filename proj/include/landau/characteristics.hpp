#pragma once

// Characteristics of the perturbed flow, dX/ds = V, dV/ds = E(X, s), anchored at
// (X, V)(s = t) = (x, v), and the deviations from free streaming
//   Y~(x, v, s, t) = X(x + t v, v, s, t) - x - s v,   W~(x, v, s, t) = V(x + t v, v, s, t) - v.
// A field is any callable (const Vec3& x, double s) -> Vec3.

#include <atomic>
#include <limits>

#include "quadrature.hpp"
#include "radial.hpp"

namespace landau {

struct ZeroField {
  Vec3 operator()(const Vec3&, double) const { return {0.0, 0.0, 0.0}; }
};

struct ConstantField {
  Vec3 e0;
  Vec3 operator()(const Vec3&, double) const { return e0; }
};

/// E(x, s) = e(|x|, s) x / |x| from a radial callable e(r, s).
template <class RadialFn>
struct RadialField {
  RadialFn e;
  Vec3 operator()(const Vec3& x, double s) const {
    const double r = norm(x);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    return (e(r, s) / r) * x;
  }
  double radial(double r, double s) const { return e(r, s); }
};
template <class RadialFn>
RadialField(RadialFn) -> RadialField<RadialFn>;

/// Radial field history e(r_i, t_n) sampled by bilinear interpolation. Queries
/// outside the stored (r, t) box return zero and are counted.
class RadialHistorySampler {
 public:
  RadialHistorySampler(RadialGrid grid, double dt, std::vector<std::vector<double>> e)
      : grid_(std::move(grid)), dt_(dt), e_(std::move(e)) {
    if (e_.empty()) throw std::invalid_argument("RadialHistorySampler: empty history");
    for (const auto& row : e_)
      if (row.size() != grid_.size()) throw std::invalid_argument("RadialHistorySampler: row size mismatch");
  }
  RadialHistorySampler(const RadialHistorySampler& o) : grid_(o.grid_), dt_(o.dt_), e_(o.e_) {}

  double t_max() const noexcept { return dt_ * (e_.size() - 1); }
  const RadialGrid& grid() const noexcept { return grid_; }

  double radial(double r, double s) const {
    const double sign = r < 0.0 ? -1.0 : 1.0;
    r = std::abs(r);
    const double tol = 1e-12 * std::max(1.0, t_max());
    if (r > grid_.r_max() || s < -tol || s > t_max() + tol) {
      outside_.fetch_add(1, std::memory_order_relaxed);
      return 0.0;
    }
    s = std::clamp(s, 0.0, t_max());
    const double x = s / dt_;
    std::size_t n = std::min(static_cast<std::size_t>(x), e_.size() - 1);
    if (n + 1 >= e_.size()) return sign * grid_.interpolate(e_.back(), r);
    const double w = x - n;
    return sign * ((1.0 - w) * grid_.interpolate(e_[n], r) + w * grid_.interpolate(e_[n + 1], r));
  }

  Vec3 operator()(const Vec3& x, double s) const {
    const double r = norm(x);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    return (radial(r, s) / r) * x;
  }

  /// Number of queries that fell outside the stored box.
  std::size_t outside_queries() const noexcept { return outside_.load(); }

 private:
  RadialGrid grid_;
  double dt_;
  std::vector<std::vector<double>> e_;
  mutable std::atomic<std::size_t> outside_{0};
};

struct Trajectory {
  std::vector<double> s;          // from t down to 0
  std::vector<Vec3> X, V;         // characteristic through (x, v) at time t
  std::vector<Vec3> Y, W;         // deviations, from the characteristic through (x + t v, v)
};

struct CharacteristicOptions {
  double max_dv = std::numeric_limits<double>::infinity();  // per-step |dV| guard
  bool deviations = true;
};

namespace detail {

template <class Field>
void rk4_step(Vec3& X, Vec3& V, double s, double h, const Field& E, double max_dv) {
  const Vec3 k1x = V, k1v = E(X, s);
  const Vec3 k2x = V + (0.5 * h) * k1v, k2v = E(X + (0.5 * h) * k1x, s + 0.5 * h);
  const Vec3 k3x = V + (0.5 * h) * k2v, k3v = E(X + (0.5 * h) * k2x, s + 0.5 * h);
  const Vec3 k4x = V + h * k3v, k4v = E(X + h * k3x, s + h);
  const Vec3 dX = (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  const Vec3 dV = (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  if (!(norm(dV) <= max_dv))
    throw BlowUpError("characteristics: velocity increment " + std::to_string(norm(dV)) + " exceeds guard at s = " +
                      std::to_string(s));
  X = X + dX;
  V = V + dV;
}

template <class Field>
void integrate_path(Vec3 X, Vec3 V, double s0, double s1, std::size_t n, const Field& E, double max_dv,
                    std::vector<Vec3>& Xs, std::vector<Vec3>& Vs) {
  Xs.resize(n + 1);
  Vs.resize(n + 1);
  Xs[0] = X;
  Vs[0] = V;
  const double h = (s1 - s0) / n;
  for (std::size_t j = 0; j < n; ++j) {
    rk4_step(X, V, s0 + j * h, h, E, max_dv);
    Xs[j + 1] = X;
    Vs[j + 1] = V;
  }
}

}  // namespace detail

/// Classical RK4 from s = t down to s = 0 in `n_steps` uniform steps.
template <class Field>
Trajectory integrate_backward(const Vec3& x, const Vec3& v, double t, std::size_t n_steps, const Field& E,
                              const CharacteristicOptions& opt = {}) {
  if (!(t >= 0.0) || n_steps == 0) throw std::invalid_argument("integrate_backward: need t >= 0 and n_steps > 0");
  Trajectory tr;
  tr.s.resize(n_steps + 1);
  for (std::size_t j = 0; j <= n_steps; ++j) tr.s[j] = t - t * j / n_steps;
  tr.s.back() = 0.0;
  detail::integrate_path(x, v, t, 0.0, n_steps, E, opt.max_dv, tr.X, tr.V);
  if (opt.deviations) {
    std::vector<Vec3> X2, V2;
    detail::integrate_path(x + t * v, v, t, 0.0, n_steps, E, opt.max_dv, X2, V2);
    tr.Y.resize(n_steps + 1);
    tr.W.resize(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
      tr.Y[j] = X2[j] - x - tr.s[j] * v;
      tr.W[j] = V2[j] - v;
    }
    tr.Y[0] = {0.0, 0.0, 0.0};
    tr.W[0] = {0.0, 0.0, 0.0};
  }
  return tr;
}

/// Forward RK4 from (X, V) at s0 to s1 > s0; returns the end state.
template <class Field>
std::pair<Vec3, Vec3> integrate_forward(const Vec3& X0, const Vec3& V0, double s0, double s1, std::size_t n_steps,
                                        const Field& E, double max_dv = std::numeric_limits<double>::infinity()) {
  Vec3 X = X0, V = V0;
  const double h = (s1 - s0) / n_steps;
  for (std::size_t j = 0; j < n_steps; ++j) detail::rk4_step(X, V, s0 + j * h, h, E, max_dv);
  return {X, V};
}

/// Data-parallel batch over seeds; result slot i belongs to seed i.
template <class Field>
std::vector<Trajectory> integrate_backward_batch(const std::vector<std::pair<Vec3, Vec3>>& seeds, double t,
                                                 std::size_t n_steps, const Field& E, int workers = 1,
                                                 const CharacteristicOptions& opt = {}) {
  std::vector<Trajectory> out(seeds.size());
  parallel_for(seeds.size(), workers,
               [&](std::size_t i) { out[i] = integrate_backward(seeds[i].first, seeds[i].second, t, n_steps, E, opt); });
  return out;
}

// ---------------------------------------------------------------------------
// Reduced spherical coordinates: r' = u, u' = e(r, s) + l^2 / r^3, l = r w fixed.

struct ReducedTrajectory {
  std::vector<double> s, r, u;
  double ell = 0.0;
  double r_min = std::numeric_limits<double>::infinity();
  std::size_t substeps = 0;

  /// Tangential speed l / r along the path (zero on the l = 0 line).
  double w(std::size_t j) const { return ell == 0.0 ? 0.0 : ell / r[j]; }
};

struct ReducedOptions {
  double r_safe = 1e-2;     // adaptive step doubling below this radius
  double tol = 1e-12;       // local error target of the step doubling
  int max_depth = 30;
  double max_dv = std::numeric_limits<double>::infinity();
};

namespace detail {

template <class RadialFn>
void reduced_rk4(double& r, double& u, double ell, double s, double h, const RadialFn& e) {
  auto acc = [&](double rr, double ss) {
    // the l = 0 line uses a signed coordinate with e(-r) = -e(r)
    const double er = rr < 0.0 ? -e(-rr, ss) : e(rr, ss);
    return ell == 0.0 ? er : er + ell * ell / (rr * rr * rr);
  };
  const double k1r = u, k1u = acc(r, s);
  const double k2r = u + 0.5 * h * k1u, k2u = acc(r + 0.5 * h * k1r, s + 0.5 * h);
  const double k3r = u + 0.5 * h * k2u, k3u = acc(r + 0.5 * h * k2r, s + 0.5 * h);
  const double k4r = u + h * k3u, k4u = acc(r + h * k3r, s + h);
  r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
}

template <class RadialFn>
void reduced_adaptive(double& r, double& u, double ell, double s, double h, const RadialFn& e,
                      const ReducedOptions& opt, int depth, std::size_t& count, double& r_min) {
  const bool near = ell != 0.0 && std::abs(r) < opt.r_safe;
  if (!near || depth >= opt.max_depth) {
    reduced_rk4(r, u, ell, s, h, e);
    ++count;
    r_min = std::min(r_min, std::abs(r));
    return;
  }
  double r1 = r, u1 = u;
  reduced_rk4(r1, u1, ell, s, h, e);
  double r2 = r, u2 = u;
  reduced_rk4(r2, u2, ell, s, 0.5 * h, e);
  reduced_rk4(r2, u2, ell, s + 0.5 * h, 0.5 * h, e);
  if (std::isfinite(r1) && std::abs(r1 - r2) + std::abs(u1 - u2) * std::abs(h) < opt.tol && r2 > 0.0) {
    r = r2;
    u = u2;
    count += 3;
    r_min = std::min(r_min, std::abs(r));
    return;
  }
  reduced_adaptive(r, u, ell, s, 0.5 * h, e, opt, depth + 1, count, r_min);
  reduced_adaptive(r, u, ell, s + 0.5 * h, 0.5 * h, e, opt, depth + 1, count, r_min);
}

}  // namespace detail

/// Reduced characteristic from (r, u) with angular momentum `ell` at s = t down to
/// s = 0. `e` is the radial field e(r, s) for r >= 0. ell = 0 selects the signed line.
template <class RadialFn>
ReducedTrajectory integrate_reduced(double r, double u, double ell, double t, std::size_t n_steps, const RadialFn& e,
                                    const ReducedOptions& opt = {}) {
  if (ell < 0.0) throw std::invalid_argument("integrate_reduced: angular momentum must be nonnegative");
  if (ell > 0.0 && !(r > 0.0)) throw std::invalid_argument("integrate_reduced: r must be positive when ell > 0");
  ReducedTrajectory tr;
  tr.ell = ell;
  tr.s.resize(n_steps + 1);
  tr.r.resize(n_steps + 1);
  tr.u.resize(n_steps + 1);
  tr.s[0] = t;
  tr.r[0] = r;
  tr.u[0] = u;
  tr.r_min = std::abs(r);
  const double h = -t / n_steps;
  for (std::size_t j = 0; j < n_steps; ++j) {
    const double u_before = u;
    detail::reduced_adaptive(r, u, ell, t + j * h, h, e, opt, 0, tr.substeps, tr.r_min);
    if (!(std::abs(u - u_before) <= opt.max_dv) && ell == 0.0)
      throw BlowUpError("integrate_reduced: velocity increment exceeds guard");
    tr.s[j + 1] = t + (j + 1) * h;
    tr.r[j + 1] = r;
    tr.u[j + 1] = u;
  }
  tr.s.back() = 0.0;
  return tr;
}

// ---------------------------------------------------------------------------
// Fixed-point oracle for the deviations:
//   W~(s) = -\int_s^t E(x + tau v + Y~(tau), tau) dtau,
//   Y~(s) =  \int_s^t (tau - s) E(x + tau v + Y~(tau), tau) dtau.

struct DeviationSeries {
  std::vector<double> s;  // ascending, 0 .. t
  std::vector<Vec3> Y, W;
  int iterations = 0;
  std::vector<double> history;  // sup-norm change per iteration
};

template <class Field>
DeviationSeries deviation_picard(const Vec3& x, const Vec3& v, double t, std::size_t n_steps, const Field& E,
                                 double tol = 1e-10, int max_iter = 60) {
  if (!(t > 0.0) || n_steps < 4) throw std::invalid_argument("deviation_picard: need t > 0 and n_steps >= 4");
  DeviationSeries out;
  const std::size_t n = n_steps + 1;
  const double h = t / n_steps;
  out.s.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.s[j] = j * h;
  out.s.back() = t;
  out.Y.assign(n, {0.0, 0.0, 0.0});
  out.W.assign(n, {0.0, 0.0, 0.0});
  std::vector<double> e(n), te(n);
  int growth = 0;
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<Vec3> field(n);
    for (std::size_t j = 0; j < n; ++j) field[j] = E(x + out.s[j] * v + out.Y[j], out.s[j]);
    std::vector<Vec3> Ynew(n), Wnew(n);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t j = 0; j < n; ++j) {
        e[j] = field[j][c];
        te[j] = out.s[j] * field[j][c];
      }
      const auto Ce = quad::cumulative_integral(e, h);
      const auto Cte = quad::cumulative_integral(te, h);
      for (std::size_t j = 0; j < n; ++j) {
        const double int_e = Ce.back() - Ce[j];
        const double int_te = Cte.back() - Cte[j];
        Wnew[j][c] = -int_e;
        Ynew[j][c] = int_te - out.s[j] * int_e;
      }
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, norm(Ynew[j] - out.Y[j]) + norm(Wnew[j] - out.W[j]));
    out.Y = std::move(Ynew);
    out.W = std::move(Wnew);
    out.iterations = it;
    out.history.push_back(diff);
    if (diff < tol) return out;
    if (out.history.size() >= 2 && diff > out.history[out.history.size() - 2]) {
      if (++growth >= 3 || !std::isfinite(diff))
        throw NonConvergenceError("deviation_picard: iterates grow; field too large for the perturbative regime",
                                  out.history);
    } else {
      growth = 0;
    }
  }
  throw NonConvergenceError("deviation_picard: no convergence within the iteration budget", out.history);
}

}  // namespace landau

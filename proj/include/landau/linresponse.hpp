#pragma once

// Linearized Vlasov-Poisson around M0: free-streaming forcing, per-mode density
// and field, physical-space reconstruction, and the two static/oscillatory
// representations of the per-mode solution.
//
// For real data the mode at -xi is the conjugate of the mode at xi, so the
// oscillatory part of the reconstruction Re(e^{-it} T) generalizes to
// (e^{-it} T(xi) + e^{it} conj(T(-xi))) / 2; DecompositionPair stores T(-xi) as
// `t_mirror`, built from the conjugated data.

#include "dispersion.hpp"
#include "velocity.hpp"
#include "volterra.hpp"

namespace landau {

/// Logarithmic grid of n points on [k_min, k_max].
inline std::vector<double> log_kgrid(std::size_t n, double k_min, double k_max) {
  if (n < 2 || !(k_min > 0.0) || !(k_max > k_min)) throw std::invalid_argument("log_kgrid: need n >= 2, 0 < k_min < k_max");
  std::vector<double> k(n);
  const double a = std::log(k_min), b = std::log(k_max);
  for (std::size_t i = 0; i < n; ++i) k[i] = std::exp(a + (b - a) * i / (n - 1.0));
  return k;
}

/// H^(k, t) = eps a^(k) b^(t k): closed form of \int f0^(xi, v) e^{-i t v.xi} dv.
inline ModeSeries free_streaming_forcing(const InitialDatum& f0, double k, double dt, std::size_t n_steps) {
  if (!(k > 0.0)) throw std::invalid_argument("free_streaming_forcing: k must be positive");
  const double ak = f0.amplitude * f0.spatial.transform(k);
  return ModeSeries::sample(k, dt, n_steps, [&](double t) { return cplx(ak * f0.velocity.transform(t * k)); });
}

/// Same forcing evaluated by velocity quadrature of an arbitrary f0^(xi, v) = g(speed, mu).
/// Warns when t k |v|_max exceeds `phase_limit` (unresolved phases e^{-i t v.xi}).
template <class G>
ModeSeries free_streaming_forcing_quadrature(G&& f0_hat, const VelocityQuadrature& vq, double k, double dt,
                                             std::size_t n_steps, double vmax, double phase_limit = 40.0,
                                             Warnings* warnings = nullptr) {
  if (!(k > 0.0)) throw std::invalid_argument("free_streaming_forcing: k must be positive");
  if (warnings && n_steps * dt * k * vmax > phase_limit)
    warnings->add("free-streaming quadrature: t*k*|v|max reaches " + std::to_string(n_steps * dt * k * vmax) +
                  " beyond the resolved phase limit " + std::to_string(phase_limit));
  std::vector<cplx> data(vq.size());
  for (std::size_t p = 0; p < vq.size(); ++p) data[p] = f0_hat(vq.nodes()[p].speed, vq.nodes()[p].mu);
  return ModeSeries::sample(k, dt, n_steps, [&](double t) {
    cplx sum = 0.0;
    for (std::size_t p = 0; p < vq.size(); ++p) {
      const auto& n = vq.nodes()[p];
      sum += n.weight * data[p] * std::exp(-I * (t * k * n.speed * n.mu));
    }
    return sum;
  });
}

/// Isotropic data: the angular integral of e^{-i t k s mu} is 2 sinc(t k s) in closed
/// form, so only the speed axis of `vq` is sampled.
inline ModeSeries free_streaming_forcing_quadrature(const InitialDatum& f0, const VelocityQuadrature& vq, double k,
                                                    double dt, std::size_t n_steps, double phase_limit = 40.0,
                                                    Warnings* warnings = nullptr) {
  if (!(k > 0.0)) throw std::invalid_argument("free_streaming_forcing: k must be positive");
  const double vmax = vq.significant_speed([&](double s) { return f0.velocity.value(s); });
  if (warnings && n_steps * dt * k * vmax > phase_limit)
    warnings->add("free-streaming quadrature: t*k*|v|max reaches " + std::to_string(n_steps * dt * k * vmax) +
                  " beyond the resolved phase limit " + std::to_string(phase_limit));
  const auto& s = vq.speeds();
  std::vector<double> data(s.size());
  for (std::size_t a = 0; a < s.size(); ++a) data[a] = 4.0 * pi * vq.speed_weights()[a] * f0.transform_x(k, s[a]);
  return ModeSeries::sample(k, dt, n_steps, [&](double t) {
    double sum = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) sum += data[a] * sinc(t * k * s[a]);
    return cplx(sum);
  });
}

// ---------------------------------------------------------------------------
// Static / oscillatory representations.

enum class Representation { I, II };

struct DecompositionPair {
  ModeSeries r_part;
  ModeSeries t_part;
  ModeSeries t_mirror;
  Representation representation = Representation::I;

  /// Oscillatory component (e^{-it} T + e^{it} conj(T_mirror)) / 2 at every sample.
  ModeSeries oscillatory() const {
    std::vector<cplx> v(t_part.size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      const cplx ph = std::exp(-I * t_part.time(n));
      v[n] = 0.5 * (ph * t_part[n] + std::conj(ph * t_mirror[n]));
    }
    return ModeSeries(t_part.k(), t_part.dt(), std::move(v));
  }

  ModeSeries reconstruct() const {
    ModeSeries out = oscillatory();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += r_part[n];
    return out;
  }
};

namespace detail {
/// T(t) = -i \int_0^t e^{is} e^{-(t-s)k} H(s) ds by the trapezoid recursion.
inline ModeSeries oscillatory_memory(const ModeSeries& h) {
  const double k = h.k(), dt = h.dt();
  const double a = std::exp(-k * dt);
  std::vector<cplx> T(h.size());
  T[0] = 0.0;
  for (std::size_t n = 0; n + 1 < h.size(); ++n) {
    const cplx left = a * std::exp(I * h.time(n)) * h[n];
    const cplx right = std::exp(I * h.time(n + 1)) * h[n + 1];
    T[n + 1] = a * T[n] - I * (0.5 * dt) * (left + right);
  }
  return ModeSeries(k, dt, std::move(T));
}
}  // namespace detail

/// Representation I: R = H, T = -i \int_0^t e^{is} e^{-(t-s)k} H(s) ds.
inline DecompositionPair decompose_repI(const ModeSeries& forcing) {
  detail::check_forcing(forcing, "decompose_repI");
  return {forcing, detail::oscillatory_memory(forcing), detail::oscillatory_memory(forcing.conj()),
          Representation::I};
}

/// Representation II for time-independent data f0^(xi, v) sampled on `vq`:
///   R(t) = \int D^2 / (1 + D^2) f0^ e^{-i t v.xi} dv,  T(t) = e^{-tk} \int (1 - iD)^{-1} f0^ dv,
/// with D = k - i v.xi. Requires |v.xi| <= 1/2 on every node carrying data.
template <class G>
DecompositionPair decompose_repII(G&& f0_hat, const VelocityQuadrature& vq, double k, double dt, std::size_t n_steps,
                                  double resonance_bound = 0.5) {
  if (!(k > 0.0)) throw std::invalid_argument("decompose_repII: k must be positive");
  std::vector<cplx> data(vq.size());
  double worst = 0.0;
  for (std::size_t p = 0; p < vq.size(); ++p) {
    const auto& n = vq.nodes()[p];
    data[p] = f0_hat(n.speed, n.mu);
    if (data[p] != 0.0) worst = std::max(worst, std::abs(k * n.speed * n.mu));
  }
  if (worst > resonance_bound)
    throw std::invalid_argument("decompose_repII: resonance guard violated, sup |v.xi| = " + std::to_string(worst) +
                                " exceeds " + std::to_string(resonance_bound));
  cplx t_sum = 0.0, t_sum_mirror = 0.0;
  std::vector<cplx> gain(vq.size());
  for (std::size_t p = 0; p < vq.size(); ++p) {
    const auto& n = vq.nodes()[p];
    const cplx D(k, -k * n.speed * n.mu);
    gain[p] = n.weight * data[p] * D * D / (1.0 + D * D);
    t_sum += n.weight * data[p] / (1.0 - I * D);
    t_sum_mirror += n.weight * std::conj(data[p]) / (1.0 - I * std::conj(D));
  }
  auto R = ModeSeries::sample(k, dt, n_steps, [&](double t) {
    cplx s = 0.0;
    for (std::size_t p = 0; p < vq.size(); ++p) {
      const auto& n = vq.nodes()[p];
      s += gain[p] * std::exp(-I * (t * k * n.speed * n.mu));
    }
    return s;
  });
  auto T = ModeSeries::sample(k, dt, n_steps, [&](double t) { return std::exp(-t * k) * t_sum; });
  auto Tm = ModeSeries::sample(k, dt, n_steps, [&](double t) { return std::exp(-t * k) * t_sum_mirror; });
  return {std::move(R), std::move(T), std::move(Tm), Representation::II};
}

inline DecompositionPair decompose_repII(const InitialDatum& f0, const VelocityQuadrature& vq, double k, double dt,
                                         std::size_t n_steps, double resonance_bound = 0.5) {
  return decompose_repII([&](double s, double) { return cplx(f0.transform_x(k, s)); }, vq, k, dt, n_steps,
                         resonance_bound);
}

// ---------------------------------------------------------------------------
// Full linear run.

namespace detail {
/// (sin x - x cos x), accurate for small x.
inline double sin_minus_xcos(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x * x2 / 3.0 * (1.0 - x2 / 10.0 + x2 * x2 / 280.0);
  }
  return std::sin(x) - x * std::cos(x);
}
}  // namespace detail

struct LinearRun {
  std::vector<double> kgrid;
  double dt = 0.05;
  std::size_t n_steps = 0;
  std::vector<ModeSeries> rho_hat;  // one per k
  std::vector<std::string> warnings;

  double time(std::size_t n) const { return n * dt; }

  /// |E^(k, t)| = |rho^| / k.
  double field_magnitude(std::size_t ik, std::size_t n) const { return std::abs(rho_hat[ik][n]) / kgrid[ik]; }

  /// rho(r, t_n) = (2 pi^2)^{-1} \int rho^(k) k^2 sinc(k r) dk (trapezoid over the k-grid with k = 0 prepended).
  double rho_at(double r, std::size_t n) const {
    return k_integral(n, [r](double k) { return k * k * sinc(k * r); }) / (2.0 * pi * pi);
  }

  /// Radial field e(r, t_n) = r^{-2} \int_0^r rho s^2 ds
  ///   = (2 pi^2 r^2)^{-1} \int rho^(k) (sin kr - kr cos kr) / k dk.
  double field_at(double r, std::size_t n) const {
    if (r == 0.0) return 0.0;
    return k_integral(n, [r](double k) { return detail::sin_minus_xcos(k * r) / k; }) / (2.0 * pi * pi * r * r);
  }

  /// sup_r |e(r, t_n)| over r = <t> x, x in [0, x_max] (the field spreads ballistically).
  double sup_abs_field(std::size_t n, double x_max = 5.0, int samples = 201) const {
    const double scale = jbracket(time(n));
    double m = 0.0;
    for (int i = 1; i < samples; ++i) m = std::max(m, std::abs(field_at(scale * x_max * i / (samples - 1.0), n)));
    return m;
  }

  /// 4 pi \int |rho| r^2 dr on the same scaled grid.
  double l1_rho(std::size_t n, double x_max = 5.0, int samples = 201) const {
    const double scale = jbracket(time(n));
    const double h = scale * x_max / (samples - 1.0);
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double r = h * i;
      const double w = (i == 0 || i == samples - 1) ? 0.5 : 1.0;
      s += w * std::abs(rho_at(r, n)) * r * r;
    }
    return 4.0 * pi * h * s;
  }

 private:
  template <class W>
  double k_integral(std::size_t n, W&& weight) const {
    double sum = 0.0, k_prev = 0.0, g_prev = 0.0;  // integrand vanishes at k = 0
    for (std::size_t i = 0; i < kgrid.size(); ++i) {
      const double k = kgrid[i];
      const double g = rho_hat[i][n].real() * weight(k);
      sum += 0.5 * (k - k_prev) * (g + g_prev);
      k_prev = k;
      g_prev = g;
    }
    return sum;
  }
};

/// Per mode: forcing -> resolvent (Poisson) or marching (other equilibria) -> rho^.
inline LinearRun solve_linear(const InitialDatum& f0, const std::vector<double>& kgrid, double dt, double t_max,
                              const Equilibrium& eq = Equilibrium::poisson(), int workers = 1) {
  if (kgrid.empty()) throw std::invalid_argument("solve_linear: empty k-grid");
  for (double k : kgrid)
    if (!(k > 0.0)) throw std::invalid_argument("solve_linear: k-grid must be positive");
  LinearRun run;
  run.kgrid = kgrid;
  run.dt = dt;
  run.n_steps = static_cast<std::size_t>(std::llround(t_max / dt));
  run.rho_hat.resize(kgrid.size());
  parallel_for(kgrid.size(), workers, [&](std::size_t i) {
    const ModeSeries h = free_streaming_forcing(f0, kgrid[i], dt, run.n_steps);
    run.rho_hat[i] = eq.is_poisson() ? apply_resolvent(h) : solve_volterra_march(h, eq);
  });
  return run;
}

}  // namespace landau

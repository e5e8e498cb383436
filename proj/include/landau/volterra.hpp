#pragma once

// Per-mode forced Volterra equation
//   rho^(t) + \int_0^t (t - s) M0^((t - s) k) rho^(s) ds = H^(t)
// on uniform time grids: direct product-trapezoid marching and the explicit
// resolvent formula rho^ = H^ - \int_0^t H^(tau) e^{-(t - tau) k} sin(t - tau) dtau.

#include <optional>

#include "equilibrium.hpp"

namespace landau {

/// Complex samples of one spatial-frequency magnitude k on t_n = n dt, n = 0..N.
class ModeSeries {
 public:
  ModeSeries() = default;
  ModeSeries(double k, double dt, std::vector<cplx> values) : k_(k), dt_(dt), values_(std::move(values)) {
    if (!(dt > 0.0)) throw std::invalid_argument("ModeSeries: time step must be positive");
    if (values_.empty()) throw std::invalid_argument("ModeSeries: empty series");
    check_finite();
  }

  /// Build from explicit sample times; they must start at 0 and be uniformly spaced.
  ModeSeries(double k, const std::vector<double>& times, std::vector<cplx> values)
      : k_(k), values_(std::move(values)) {
    if (times.size() != values_.size()) throw std::invalid_argument("ModeSeries: times/values length mismatch");
    if (times.size() < 2) throw std::invalid_argument("ModeSeries: need at least two samples");
    if (times.front() != 0.0) throw std::invalid_argument("ModeSeries: grid must start at t = 0");
    dt_ = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt_ > 0.0)) throw std::invalid_argument("ModeSeries: times must be strictly increasing");
    for (std::size_t n = 1; n < times.size(); ++n) {
      const double step = times[n] - times[n - 1];
      if (!(step > 0.0) || std::abs(step - dt_) > 1e-9 * dt_ + 1e-12 * std::abs(times[n]))
        throw std::invalid_argument("ModeSeries: non-uniform time grid");
    }
    check_finite();
  }

  /// Sample a callable on the grid 0, dt, ..., n_steps dt.
  template <class F>
  static ModeSeries sample(double k, double dt, std::size_t n_steps, F&& f) {
    std::vector<cplx> v(n_steps + 1);
    for (std::size_t n = 0; n <= n_steps; ++n) v[n] = f(n * dt);
    return ModeSeries(k, dt, std::move(v));
  }

  double k() const noexcept { return k_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return values_.size(); }
  double time(std::size_t n) const noexcept { return n * dt_; }
  std::vector<double> times() const {
    std::vector<double> t(size());
    for (std::size_t n = 0; n < size(); ++n) t[n] = time(n);
    return t;
  }
  const std::vector<cplx>& values() const noexcept { return values_; }
  std::vector<cplx>& values() noexcept { return values_; }
  const cplx& operator[](std::size_t n) const { return values_[n]; }
  cplx& operator[](std::size_t n) { return values_[n]; }

  ModeSeries conj() const {
    ModeSeries out = *this;
    for (auto& z : out.values_) z = std::conj(z);
    return out;
  }

  double sup_abs() const {
    double m = 0.0;
    for (const auto& z : values_) m = std::max(m, std::abs(z));
    return m;
  }

 private:
  void check_finite() const {
    for (const auto& z : values_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("ModeSeries: non-finite sample");
  }

  double k_ = 0.0;
  double dt_ = 0.0;
  std::vector<cplx> values_;
};

inline double max_abs_diff(const ModeSeries& a, const ModeSeries& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

namespace detail {
inline void check_forcing(const ModeSeries& h, const char* who) {
  if (!(h.k() > 0.0)) throw std::invalid_argument(std::string(who) + ": k must be positive");
  if (h.size() == 0) throw std::invalid_argument(std::string(who) + ": empty forcing");
}
}  // namespace detail

/// Product-trapezoid marching. The kernel (t - s) M0^((t - s) k) vanishes at
/// s = t, so each step is explicit. Poisson equilibrium: the exponential kernel
/// admits an O(N) two-term recursion; other equilibria use the O(N^2) sum.
inline ModeSeries solve_volterra_march(const ModeSeries& forcing, const Equilibrium& eq = Equilibrium::poisson()) {
  detail::check_forcing(forcing, "solve_volterra_march");
  const double k = forcing.k(), dt = forcing.dt();
  const std::size_t N = forcing.size();
  std::vector<cplx> rho(N);
  auto c = [dt](std::size_t j) { return j == 0 ? 0.5 * dt : dt; };

  if (eq.is_poisson()) {
    const double a = std::exp(-k * dt);
    cplx P = 0.0, Q = 0.0;  // P_n = sum_j c_j e^{-(t_n - t_j)k} rho_j, Q_n the same with (t_n - t_j)
    rho[0] = forcing[0];
    for (std::size_t n = 0; n + 1 < N; ++n) {
      const cplx cr = c(n) * rho[n];
      Q = a * (Q + dt * P + dt * cr);
      P = a * (P + cr);
      rho[n + 1] = forcing[n + 1] - Q;
    }
  } else {
    std::vector<double> kern(N);
    for (std::size_t m = 0; m < N; ++m) kern[m] = m * dt * eq.fourier(m * dt * k);
    for (std::size_t n = 0; n < N; ++n) {
      cplx sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += c(j) * kern[n - j] * rho[j];
      rho[n] = forcing[n] - sum;
    }
  }
  return ModeSeries(k, dt, std::move(rho));
}

/// Residual of the discrete equation, rho_n + sum_j w_nj K(t_n - t_j) rho_j - H_n.
inline ModeSeries volterra_residual(const ModeSeries& rho, const ModeSeries& forcing,
                                    const Equilibrium& eq = Equilibrium::poisson()) {
  if (rho.size() != forcing.size()) throw std::invalid_argument("volterra_residual: length mismatch");
  const double k = forcing.k(), dt = forcing.dt();
  const std::size_t N = forcing.size();
  std::vector<double> kern(N);
  for (std::size_t m = 0; m < N; ++m) kern[m] = m * dt * eq.fourier(m * dt * k);
  std::vector<cplx> r(N);
  for (std::size_t n = 0; n < N; ++n) {
    cplx sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += (j == 0 ? 0.5 * dt : dt) * kern[n - j] * rho[j];
    r[n] = rho[n] + sum - forcing[n];
  }
  return ModeSeries(k, dt, std::move(r));
}

/// Trapezoid evaluation of J(t_n) = \int_0^{t_n} H(tau) e^{-(t_n - tau) z} dtau for complex z,
/// by the recursion J_{n+1} = a J_n + dt/2 (a H_n + H_{n+1}), a = e^{-z dt}.
inline std::vector<cplx> exponential_memory(const ModeSeries& h, cplx z) {
  const std::size_t N = h.size();
  const cplx a = std::exp(-z * h.dt());
  std::vector<cplx> J(N);
  J[0] = 0.0;
  for (std::size_t n = 0; n + 1 < N; ++n) J[n + 1] = a * J[n] + 0.5 * h.dt() * (a * h[n] + h[n + 1]);
  return J;
}

/// rho^(t) = H^(t) - \int_0^t H^(tau) e^{-(t - tau)k} sin(t - tau) dtau (Poisson resolvent).
inline ModeSeries apply_resolvent(const ModeSeries& forcing) {
  detail::check_forcing(forcing, "apply_resolvent");
  const double k = forcing.k();
  const auto Jp = exponential_memory(forcing, cplx(k, -1.0));  // kernel e^{-(t-tau)k} e^{+i(t-tau)}
  const auto Jm = exponential_memory(forcing, cplx(k, 1.0));
  std::vector<cplx> rho(forcing.size());
  for (std::size_t n = 0; n < rho.size(); ++n) rho[n] = forcing[n] - (Jp[n] - Jm[n]) / (2.0 * I);
  return ModeSeries(k, forcing.dt(), std::move(rho));
}

}  // namespace landau

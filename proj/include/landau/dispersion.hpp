#pragma once

// Dispersion function K(k, lambda) = \int_0^inf r M0^(r k) e^{-i lambda r} dr, the
// Penrose factor 1 + K, its zeros (Landau poles) and the resolvent kernel
// G(k, tau) = delta_0(tau) - e^{-tau k} sin(tau) 1_+(tau) of the Poisson case.
//
// Laplace convention: transforms use e^{-i lambda t} and converge for Im lambda < 0.
// Poles sit at Im lambda > 0 and correspond to modes e^{i lambda t}.

#include <optional>

#include "equilibrium.hpp"

namespace landau {

namespace detail {

inline void check_dispersion_domain(double k, cplx lambda, bool continued) {
  if (!(k > 0.0))
    throw std::invalid_argument("dispersion: k must be positive (k = 0 is the pole where the Penrose bound fails)");
  if (lambda.imag() > 0.0 && !continued)
    throw std::invalid_argument("dispersion: Im lambda > 0 lies outside the Laplace half plane");
}

}  // namespace detail

/// Numeric Laplace integral for K and dK/dlambda at one frequency magnitude.
/// Composite Gauss-Legendre: dyadic panels near r = 0 growing to a fixed width,
/// truncated once the envelope r |M0^(r k)| e^{Im(lambda) r} bounds the
/// remaining tail below the absolute tolerance. M0^ samples are cached per node,
/// so repeated evaluations at the same k (root finding) reuse them.
class DispersionQuadrature {
 public:
  DispersionQuadrature(const Equilibrium& eq, double k, double abs_tol = 1e-9)
      : eq_(eq), k_(k), abs_tol_(abs_tol) {
    if (!(k > 0.0)) throw std::invalid_argument("DispersionQuadrature: k must be positive");
    width_ = std::min(0.5, 0.5 / k);
  }

  /// K(k, lambda) without the half-plane check; valid wherever the integral converges.
  cplx K(cplx lambda) { return integrate(lambda, false); }
  /// dK/dlambda = -i \int r^2 M0^(r k) e^{-i lambda r} dr.
  cplx dK(cplx lambda) { return integrate(lambda, true); }

 private:
  void extend_panel() {
    const double a = edges_.empty() ? 0.0 : edges_.back();
    double h = width_;
    if (edges_.empty()) {
      edges_.push_back(0.0);
      edge_mhat_.push_back(eq_.fourier(0.0));
      h = width_ / 64.0;
    } else if (edges_.size() >= 2) {
      h = std::min(width_, 2.0 * (a - edges_[edges_.size() - 2]));
    }
    const double b = a + h;
    const quad::Rule& rule = quad::gauss_legendre(kNodes);
    for (int i = 0; i < kNodes; ++i) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
      nodes_.push_back(r);
      weights_.push_back(0.5 * (b - a) * rule.weights[i]);
      mhat_.push_back(eq_.fourier(r * k_));
    }
    edges_.push_back(b);
    edge_mhat_.push_back(eq_.fourier(b * k_));
  }

  cplx integrate(cplx lambda, bool derivative) {
    cplx sum = 0.0;
    const double growth = lambda.imag();
    std::size_t panel = 0;
    double previous_env = std::numeric_limits<double>::infinity();
    for (;; ++panel) {
      if (panel + 1 >= edges_.size()) extend_panel();
      const double a = edges_[panel], b = edges_[panel + 1];
      for (int i = 0; i < kNodes; ++i) {
        const std::size_t j = panel * kNodes + i;
        const double r = nodes_[j];
        cplx term = weights_[j] * r * mhat_[j] * std::exp(-I * lambda * r);
        if (derivative) term *= -I * r;
        sum += term;
      }
      // tail bound from the envelope at the panel end and its decay over the panel
      const double power = derivative ? 2.0 : 1.0;
      const double env_b = std::pow(b, power) * std::abs(edge_mhat_[panel + 1]) * std::exp(growth * b);
      const double env_a = std::pow(std::max(a, 1e-300), power) * std::abs(edge_mhat_[panel]) * std::exp(growth * a);
      if (b > 4.0 / k_ + 8.0 && env_b == 0.0) break;
      if (b > 4.0 / k_ + 8.0 && env_b < env_a && env_b <= previous_env) {
        const double ratio = env_b / env_a;
        const double tail = env_b * (b - a) / std::max(1e-300, 1.0 - ratio);
        if (tail < 0.01 * abs_tol_) break;
      }
      previous_env = env_b;
      if (b > 1e4 / k_ + 1e4)
        throw NonConvergenceError("dispersion quadrature: Laplace integral does not converge at this lambda");
    }
    return sum;
  }

  static constexpr int kNodes = 16;
  const Equilibrium& eq_;
  double k_;
  double abs_tol_;
  double width_;
  std::vector<double> edges_, edge_mhat_, nodes_, weights_, mhat_;
};

/// K(k, lambda) for k > 0, Im lambda <= 0. Poisson kind: 1 / (k + i lambda)^2.
/// `continued` admits Im lambda > 0: the closed form for Poisson, and the
/// quadrature wherever it still converges for other kinds (the Landau poles live there).
inline cplx eval_K(const Equilibrium& eq, double k, cplx lambda, double abs_tol = 1e-9, bool continued = false) {
  detail::check_dispersion_domain(k, lambda, continued);
  if (eq.is_poisson()) {
    const cplx d = k + I * lambda;
    return 1.0 / (d * d);
  }
  DispersionQuadrature q(eq, k, abs_tol);
  return q.K(lambda);
}

/// K by quadrature regardless of kind (the oracle path for the Poisson closed form).
inline cplx eval_K_quadrature(const Equilibrium& eq, double k, cplx lambda, double abs_tol = 1e-9,
                              bool continued = false) {
  detail::check_dispersion_domain(k, lambda, continued);
  DispersionQuadrature q(eq, k, abs_tol);
  return q.K(lambda);
}

/// Penrose factor 1 + K. Poisson kind: (k + i(lambda-1))(k + i(lambda+1)) / (k + i lambda)^2.
inline cplx eval_penrose(const Equilibrium& eq, double k, cplx lambda, double abs_tol = 1e-9,
                         bool continued = false) {
  detail::check_dispersion_domain(k, lambda, continued);
  if (eq.is_poisson()) {
    const cplx d = k + I * lambda;
    return (k + I * (lambda - 1.0)) * (k + I * (lambda + 1.0)) / (d * d);
  }
  return 1.0 + eval_K(eq, k, lambda, abs_tol, continued);
}

/// k -> 0 limit of 1 + K for any normalized equilibrium: 1 - lambda^{-2}.
inline cplx penrose_small_k_limit(cplx lambda) { return 1.0 - 1.0 / (lambda * lambda); }

struct LandauRoots {
  cplx plus;   // seeded at +1 + i k
  cplx minus;  // seeded at -1 + i k
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  int iterations = 0;
};

/// Zeros of 1 + K in the continued plane. Poisson: exactly +-1 + i k. Custom kinds:
/// damped Newton on 1 + K from the Poisson seeds until |1 + K| < tol.
inline LandauRoots landau_roots(const Equilibrium& eq, double k, double tol = 1e-10, int max_iter = 60) {
  if (!(k > 0.0)) throw std::invalid_argument("landau_roots: k must be positive");
  LandauRoots out;
  if (eq.is_poisson()) {
    out.plus = cplx(1.0, k);
    out.minus = cplx(-1.0, k);
    auto penrose = [k](cplx l) {
      const cplx d = k + I * l;
      return (k + I * (l - 1.0)) * (k + I * (l + 1.0)) / (d * d);
    };
    out.residual_plus = std::abs(penrose(out.plus));
    out.residual_minus = std::abs(penrose(out.minus));
    return out;
  }
  DispersionQuadrature q(eq, k, 1e-3 * tol);
  auto newton = [&](cplx lambda, double& residual) {
    for (int it = 0; it < max_iter; ++it) {
      ++out.iterations;
      const cplx f = 1.0 + q.K(lambda);
      residual = std::abs(f);
      if (residual < tol) return lambda;
      cplx step = f / q.dK(lambda);
      // damping: never move more than half the distance to the real axis scale
      const double limit = 0.5 * std::max(1.0, std::abs(lambda));
      if (std::abs(step) > limit) step *= limit / std::abs(step);
      lambda -= step;
    }
    throw NonConvergenceError("landau_roots: Newton did not converge; last iterate (" +
                              std::to_string(lambda.real()) + ", " + std::to_string(lambda.imag()) +
                              "), residual " + std::to_string(residual));
  };
  out.plus = newton(cplx(1.0, k), out.residual_plus);
  out.minus = newton(cplx(-1.0, k), out.residual_minus);
  return out;
}

/// Smooth part of the resolvent kernel: -e^{-tau k} sin(tau), tau > 0.
inline double resolvent_kernel_G(double k, double tau) {
  if (!(k > 0.0) || !(tau > 0.0)) throw std::invalid_argument("resolvent_kernel_G: k and tau must be positive");
  return -std::exp(-tau * k) * std::sin(tau);
}

/// G(k, .) = delta_weight * delta_0 + tail.
struct ResolventKernel {
  double k;
  double delta_weight = 1.0;
  double tail(double tau) const { return resolvent_kernel_G(k, tau); }
};

}  // namespace landau

#pragma once

// Gauss-Legendre rules and the composite / mapped integrators built on them.

#include <map>
#include <mutex>

#include "core.hpp"

namespace landau::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], computed by Newton iteration on P_n.
inline const Rule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return cache.emplace(n, std::move(rule)).first->second;
}

/// Gauss-Legendre on [a, b].
template <class F>
auto integrate(F&& f, double a, double b, int n = 20) {
  const Rule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  decltype(f(a)) sum{};
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

/// Composite Gauss-Legendre on `panels` equal panels of [a, b].
template <class F>
auto integrate_composite(F&& f, double a, double b, int panels, int n = 20) {
  decltype(f(a)) sum{};
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) sum += integrate(f, a + p * h, a + (p + 1) * h, n);
  return sum;
}

/// \int_0^inf f(r) dr through r = scale * tan(theta). Suited to integrands with
/// algebraic decay no slower than r^{-2}; the mapped integrand stays bounded.
template <class F>
auto integrate_half_line(F&& f, double scale = 1.0, int panels = 16, int n = 20) {
  auto mapped = [&](double theta) {
    const double c = std::cos(theta);
    const double r = scale * std::tan(theta);
    return f(r) * (scale / (c * c));
  };
  return integrate_composite(mapped, 0.0, 0.5 * pi, panels, n);
}

/// Repeated averaging of consecutive partial sums (Euler transform); accelerates
/// alternating series whose terms have a slowly varying envelope.
inline double accelerate_alternating(std::vector<double> partial) {
  while (partial.size() > 1) {
    for (std::size_t i = 0; i + 1 < partial.size(); ++i) partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    partial.pop_back();
  }
  return partial.empty() ? 0.0 : partial.front();
}

/// \int_0^inf g(r) sin(k r) dr for k > 0 and g decaying (possibly algebraically).
/// Integrates half-period panels (subdivided to at most `max_width`) between zeros of sin(k r) and sums the resulting
/// alternating series with Euler acceleration once the panel contributions fall
/// below `tol` relative to the running sum or `max_panels` is reached.
template <class G>
double sine_transform(G&& g, double k, double tol = 1e-10, int max_panels = 4000, int n = 24,
                      double max_width = 0.5) {
  if (!(k > 0.0)) throw std::invalid_argument("sine_transform: k must be positive");
  const double half_period = pi / k;
  const int sub = std::clamp(static_cast<int>(std::ceil(half_period / max_width)), 1, 256);
  auto integrand = [&](double r) { return g(r) * std::sin(k * r); };
  std::vector<double> partial;
  double sum = 0.0;
  constexpr int kTail = 24;
  for (int p = 0; p < max_panels; ++p) {
    double term = integrate_composite(integrand, p * half_period, (p + 1) * half_period, sub, n);
    sum += term;
    partial.push_back(sum);
    if (p > kTail && std::abs(term) < tol * std::max(std::abs(sum), 1e-300)) break;
  }
  if (partial.size() <= kTail) return sum;
  std::vector<double> tail(partial.end() - kTail, partial.end());
  return accelerate_alternating(std::move(tail));
}

/// Cumulative integral of uniformly sampled f with fourth-order accuracy:
/// interior intervals use the cubic through the four neighbouring samples.
/// Returns F with F[0] = 0, F[j] = \int_{x_0}^{x_j} f.
inline std::vector<double> cumulative_integral(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> F(n, 0.0);
  if (n < 2) return F;
  if (n < 4) {
    for (std::size_t j = 1; j < n; ++j) F[j] = F[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
    return F;
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double piece;
    if (j == 0)
      piece = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    else if (j + 2 >= n)
      piece = h / 24.0 * (f[j - 2] - 5.0 * f[j - 1] + 19.0 * f[j] + 9.0 * f[j + 1]);
    else
      piece = h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]);
    F[j + 1] = F[j] + piece;
  }
  return F;
}

}  // namespace landau::quad

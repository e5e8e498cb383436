#pragma once

// Uniform radial grid r_i = i dr on [0, R_max], the radial Poisson solve
// e(r) = r^{-2} \int_0^r rho s^2 ds and the radial Fourier transform
//   f^(k) = (4 pi / k) \int_0^{R_max} f(r) r sin(k r) dr,
//   f(r)  = (2 pi^2 r)^{-1} \int f^(k) k sin(k r) dk.
// On the grid both are a type-I discrete sine transform of r f(r) at
// k_j = j pi / R_max, j = 1..N-2, and invert each other exactly.

#include "core.hpp"
#include "quadrature.hpp"

namespace landau {

class RadialGrid {
 public:
  RadialGrid() = default;
  RadialGrid(std::size_t n, double r_max) : n_(n), r_max_(r_max) {
    if (n < 4) throw std::invalid_argument("RadialGrid: need at least 4 points");
    if (!(r_max > 0.0)) throw std::invalid_argument("RadialGrid: R_max must be positive");
    dr_ = r_max / (n - 1.0);
  }

  std::size_t size() const noexcept { return n_; }
  double r_max() const noexcept { return r_max_; }
  double dr() const noexcept { return dr_; }
  double r(std::size_t i) const noexcept { return i * dr_; }
  std::vector<double> points() const {
    std::vector<double> p(n_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = r(i);
    return p;
  }

  /// 4 pi r_i^2 dr.
  double shell_volume(std::size_t i) const noexcept { return 4.0 * pi * r(i) * r(i) * dr_; }

  /// \int phi_i(r) 4 pi r^2 dr for the tent phi_i centred at r_i (half tents at both ends).
  double tent_volume(std::size_t i) const noexcept {
    const double h = dr_, c = r(i);
    // left half: \int_{c-h}^{c} (r - c + h)/h r^2 dr, right half: \int_c^{c+h} (c + h - r)/h r^2 dr
    const double left = (i == 0) ? 0.0 : (c * c * h / 2.0 - c * h * h / 3.0 + h * h * h / 12.0);
    const double right = (i + 1 == n_) ? 0.0 : (c * c * h / 2.0 + c * h * h / 3.0 + h * h * h / 12.0);
    return 4.0 * pi * (left + right);
  }

  /// Frequencies of the sine transform, k_j = j pi / R_max, j = 1..N-2.
  std::vector<double> frequencies() const {
    std::vector<double> k(n_ - 2);
    for (std::size_t j = 0; j < k.size(); ++j) k[j] = (j + 1.0) * pi / r_max_;
    return k;
  }

  /// Linear interpolation of nodal values at radius r; zero beyond R_max.
  double interpolate(const std::vector<double>& f, double r) const {
    if (r < 0.0) r = -r;
    if (r > r_max_) return 0.0;
    const double x = r / dr_;
    std::size_t i = static_cast<std::size_t>(x);
    if (i >= n_ - 1) return f[n_ - 1];
    const double w = x - i;
    return (1.0 - w) * f[i] + w * f[i + 1];
  }

  /// 4 pi \int |f| r^2 dr (trapezoid).
  double l1(const std::vector<double>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (i + 1 == n_ ? 0.5 : 1.0) * std::abs(f[i]) * r(i) * r(i);
    return 4.0 * pi * dr_ * s;
  }

  double sup(const std::vector<double>& f) const {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::size_t n_ = 0;
  double r_max_ = 1.0;
  double dr_ = 1.0;
};

/// e(r_i) = r_i^{-2} \int_0^{r_i} rho s^2 ds by the fourth-order cumulative rule; e(0) = 0.
inline std::vector<double> radial_poisson(const RadialGrid& g, const std::vector<double>& rho) {
  if (rho.size() != g.size()) throw std::invalid_argument("radial_poisson: size mismatch");
  const std::size_t n = g.size();
  const double h = g.dr();
  // panel [r_j, r_j+1]: s^2 times the cubic through four neighbouring nodes, integrated
  // exactly. The r^2 weight stays exact, so the field is fourth order down to r = 0.
  const quad::Rule& rule = quad::gauss_legendre(4);
  std::vector<double> e(n, 0.0);
  double charge = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t s0 = std::min(j > 0 ? j - 1 : 0, n - 4);
    double piece = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double x = j + 0.5 + 0.5 * rule.nodes[q];  // in units of h
      double p = 0.0;
      for (std::size_t a = s0; a < s0 + 4; ++a) {
        double l = 1.0;
        for (std::size_t b = s0; b < s0 + 4; ++b)
          if (b != a) l *= (x - static_cast<double>(b)) / (static_cast<double>(a) - static_cast<double>(b));
        p += l * rho[a];
      }
      piece += 0.5 * rule.weights[q] * x * x * p;
    }
    charge += piece * h * h * h;
    e[j + 1] = charge / (g.r(j + 1) * g.r(j + 1));
  }
  return e;
}

/// (1/r^2)(r^2 e)' = e' + 2 e / r with central differences for e' (one-sided at the
/// outer end); recovers rho to second order uniformly, including next to r = 0.
inline std::vector<double> radial_divergence(const RadialGrid& g, const std::vector<double>& e) {
  const std::size_t n = g.size();
  std::vector<double> div(n);
  const double h = g.dr();
  for (std::size_t i = 1; i + 1 < n; ++i) div[i] = (e[i + 1] - e[i - 1]) / (2.0 * h) + 2.0 * e[i] / g.r(i);
  div[n - 1] = (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * h) + 2.0 * e[n - 1] / g.r(n - 1);
  // e is odd in r: e = c r + O(r^3) with c = rho(0)/3
  div[0] = 3.0 * (8.0 * e[1] - e[2]) / (6.0 * h);
  return div;
}

/// Type-I discrete sine transform plan for the radial grid.
class RadialTransform {
 public:
  explicit RadialTransform(const RadialGrid& g) : grid_(g), m_(g.size() - 2) {
    table_.resize(m_ * m_);
    const double n1 = g.size() - 1.0;
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t i = 0; i < m_; ++i) table_[j * m_ + i] = std::sin(pi * (i + 1.0) * (j + 1.0) / n1);
    k_ = g.frequencies();
  }

  const RadialGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& frequencies() const noexcept { return k_; }

  /// f^(k_j) = (4 pi / k_j) dr sum_i f_i r_i sin(k_j r_i).
  template <class T>
  std::vector<T> forward(const std::vector<T>& f) const {
    if (f.size() != grid_.size()) throw std::invalid_argument("radial_fourier: size mismatch");
    std::vector<T> out(m_);
    for (std::size_t j = 0; j < m_; ++j) {
      T s{};
      const double* row = &table_[j * m_];
      for (std::size_t i = 0; i < m_; ++i) s += f[i + 1] * (grid_.r(i + 1) * row[i]);
      out[j] = s * (4.0 * pi * grid_.dr() / k_[j]);
    }
    return out;
  }

  /// f(r_i) = (2 pi^2 r_i)^{-1} dk sum_j f^_j k_j sin(k_j r_i); f at r = 0 from the
  /// limit sin(k r)/r -> k, f at R_max is zero by construction.
  template <class T>
  std::vector<T> inverse(const std::vector<T>& fh) const {
    if (fh.size() != m_) throw std::invalid_argument("radial_fourier inverse: size mismatch");
    std::vector<T> out(grid_.size(), T{});
    const double dk = pi / grid_.r_max();
    for (std::size_t i = 0; i < m_; ++i) {
      T s{};
      for (std::size_t j = 0; j < m_; ++j) s += fh[j] * (k_[j] * table_[j * m_ + i]);
      out[i + 1] = s * (dk / (2.0 * pi * pi * grid_.r(i + 1)));
    }
    T s0{};
    for (std::size_t j = 0; j < m_; ++j) s0 += fh[j] * (k_[j] * k_[j]);
    out[0] = s0 * (dk / (2.0 * pi * pi));
    return out;
  }

 private:
  RadialGrid grid_;
  std::size_t m_;
  std::vector<double> table_;
  std::vector<double> k_;
};

inline std::vector<double> radial_fourier(const RadialGrid& g, const std::vector<double>& f) {
  return RadialTransform(g).forward(f);
}
inline std::vector<double> radial_fourier_inverse(const RadialGrid& g, const std::vector<double>& fh) {
  return RadialTransform(g).inverse(fh);
}

}  // namespace landau

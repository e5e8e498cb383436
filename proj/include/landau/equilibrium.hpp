#pragma once

// Homogeneous isotropic equilibria M0(|v|): values, velocity gradients and
// radial Fourier transforms. The Poisson equilibrium is closed-form throughout;
// custom profiles transform numerically.

#include <memory>
#include <string>

#include "core.hpp"
#include "quadrature.hpp"

namespace landau {

enum class EquilibriumKind { Poisson, CustomIsotropic };

class Equilibrium {
 public:
  using Radial = std::function<double(double)>;

  /// M0(v) = 1 / (pi^2 (1 + |v|^2)^2), M0^(k) = e^{-k}.
  static Equilibrium poisson() {
    Equilibrium eq;
    eq.kind_ = EquilibriumKind::Poisson;
    eq.name_ = "poisson";
    eq.profile_ = [](double s) {
      const double q = 1.0 + s * s;
      return 1.0 / (pi * pi * q * q);
    };
    eq.derivative_ = [](double s) {
      const double q = 1.0 + s * s;
      return -4.0 * s / (pi * pi * q * q * q);
    };
    return eq;
  }

  /// User-supplied radial profile; `derivative` may be empty (central differences).
  static Equilibrium custom(std::string name, Radial profile, Radial derivative = {}) {
    if (!profile) throw std::invalid_argument("custom equilibrium needs a profile");
    Equilibrium eq;
    eq.kind_ = EquilibriumKind::CustomIsotropic;
    eq.name_ = std::move(name);
    eq.profile_ = std::move(profile);
    if (derivative) {
      eq.derivative_ = std::move(derivative);
    } else {
      // profiles are even in |v|, so the reflected sample keeps the stencil centred
      eq.derivative_ = [p = eq.profile_](double s) {
        const double h = 1e-5 * std::max(1.0, s);
        return (p(s + h) - p(std::abs(s - h))) / (2.0 * h);
      };
    }
    eq.prepare_transform();
    return eq;
  }

  /// Unit-temperature Maxwellian, treated as a custom profile (numeric transform).
  static Equilibrium maxwellian() {
    const double c = std::pow(2.0 * pi, -1.5);
    return custom(
        "maxwellian", [c](double s) { return c * std::exp(-0.5 * s * s); },
        [c](double s) { return -s * c * std::exp(-0.5 * s * s); });
  }

  static Equilibrium by_name(const std::string& name) {
    if (name == "poisson") return poisson();
    if (name == "maxwellian") return maxwellian();
    throw ConfigError("unknown equilibrium '" + name + "' (expected poisson|maxwellian)");
  }

  EquilibriumKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  bool is_poisson() const noexcept { return kind_ == EquilibriumKind::Poisson; }

  double radial(double speed) const { return profile_(speed); }
  double radial_derivative(double speed) const { return derivative_(speed); }

  double value(const Vec3& v) const { return profile_(norm(v)); }

  /// grad_v M0 = M0'(|v|) v/|v|.
  Vec3 grad(const Vec3& v) const {
    const double s = norm(v);
    if (s == 0.0) return {0.0, 0.0, 0.0};
    return (derivative_(s) / s) * v;
  }

  /// 4 pi \int_0^inf M0(r) r^2 dr.
  double normalization() const {
    return 4.0 * pi * quad::integrate_half_line([this](double r) { return profile_(r) * r * r; }, 1.0, 32, 24);
  }

  /// M0^(k) for k >= 0.
  double fourier(double k) const {
    if (k < 0.0) throw std::invalid_argument("m0_fourier: frequency magnitude must be nonnegative");
    if (is_poisson()) return std::exp(-k);
    return numeric_fourier(k);
  }

  /// (4 pi / k) \int_0^inf M0(r) r sin(k r) dr, with the k -> 0 limit 4 pi \int M0 r^2.
  /// Integrates on [0, R_v] where the mass tail beyond R_v is below 1e-10 of the
  /// total; profiles with tails too heavy for a finite R_v fall back to an
  /// accelerated half-period panel sum.
  double numeric_fourier(double k) const {
    const Radial& p = profile_;
    if (k == 0.0) return 4.0 * pi * mass_;
    double v;
    if (r_v_ > 0.0) {
      const double panel = std::min(0.5, 0.5 * pi / k);
      const int panels = static_cast<int>(std::ceil(r_v_ / panel));
      v = 4.0 * pi * quad::integrate_composite([&](double r) { return p(r) * r * r * sinc(k * r); }, 0.0, r_v_,
                                               panels, 20);
    } else {
      v = 4.0 * pi / k * quad::sine_transform([&](double r) { return p(r) * r; }, k);
    }
    // below the roundoff floor of the quadrature the value is noise; callers that
    // weight it by growing exponentials (the continued dispersion integral) need a clean zero
    return std::abs(v) < 1e-14 * 4.0 * pi * std::abs(mass_) ? 0.0 : v;
  }

  /// Truncation radius used by the numeric transform (0 when the tail is too heavy).
  double truncation_radius() const noexcept { return r_v_; }

 private:
  Equilibrium() = default;

  EquilibriumKind kind_{EquilibriumKind::Poisson};
  std::string name_;
  void prepare_transform() {
    auto mass_density = [this](double r) { return profile_(r) * r * r; };
    mass_ = quad::integrate_half_line(mass_density, 1.0, 32, 24);
    r_v_ = 0.0;
    for (double R = 2.0; R <= 1024.0; R *= 2.0) {
      const double tail = quad::integrate_half_line([&](double x) { return mass_density(R + x); },
                                                    std::max(1.0, 0.25 * R), 16, 20);
      if (std::abs(tail) < 1e-10 * std::abs(mass_)) {
        r_v_ = R;
        break;
      }
    }
  }

  Radial profile_;
  Radial derivative_;
  double mass_ = 0.0;
  double r_v_ = 0.0;
};

}  // namespace landau

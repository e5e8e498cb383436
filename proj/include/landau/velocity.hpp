#pragma once

// Velocity-space quadrature in (|v|, cos theta) and the separable radial initial
// data f0(x, v) = eps a(|x|) b(|v|) used by the linear and nonlinear solvers.

#include <optional>

#include "equilibrium.hpp"

namespace landau {

/// Speed axis of a VelocityQuadrature. Algebraic maps x in (0,1) to v = L x/(1-x)
/// and covers [0, inf); Finite covers [0, v_max].
struct SpeedMap {
  enum class Kind { Algebraic, Finite } kind = Kind::Algebraic;
  double scale = 1.0;  // L for Algebraic, v_max for Finite

  static SpeedMap algebraic(double L = 1.0) { return {Kind::Algebraic, L}; }
  static SpeedMap finite(double v_max) { return {Kind::Finite, v_max}; }
};

/// Tensor Gauss-Legendre rule for \int_{R^3} F(|v|, cos theta) dv, theta measured
/// from a fixed axis (the frequency direction or the radial direction).
/// Weights carry the full measure 2 pi |v|^2 d|v| d(cos theta).
class VelocityQuadrature {
 public:
  struct Node {
    double speed;
    double mu;
    double weight;
  };

  VelocityQuadrature(int n_speed, int n_mu, SpeedMap map = SpeedMap::algebraic())
      : n_speed_(n_speed), n_mu_(n_mu), map_(map) {
    if (n_speed < 1 || n_mu < 1) throw std::invalid_argument("VelocityQuadrature: node counts must be positive");
    if (!(map.scale > 0.0)) throw std::invalid_argument("VelocityQuadrature: speed scale must be positive");
    const quad::Rule& rs = quad::gauss_legendre(n_speed);
    const quad::Rule& rm = quad::gauss_legendre(n_mu);
    for (int a = 0; a < n_speed; ++a) {
      const double x = 0.5 * (rs.nodes[a] + 1.0);
      double s, ds;
      if (map.kind == SpeedMap::Kind::Algebraic) {
        s = map.scale * x / (1.0 - x);
        ds = map.scale / ((1.0 - x) * (1.0 - x));
      } else {
        s = map.scale * x;
        ds = map.scale;
      }
      const double ws = 0.5 * rs.weights[a] * ds * s * s;
      speeds_.push_back(s);
      speed_weights_.push_back(ws);
      for (int b = 0; b < n_mu; ++b) nodes_.push_back({s, rm.nodes[b], 2.0 * pi * ws * rm.weights[b]});
    }
    mus_ = rm.nodes;
    mu_weights_ = rm.weights;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  int n_speed() const noexcept { return n_speed_; }
  int n_mu() const noexcept { return n_mu_; }
  const SpeedMap& map() const noexcept { return map_; }

  /// Speed nodes and weights for isotropic integrands: \int F(|v|) dv = 4 pi sum w_a F(s_a).
  const std::vector<double>& speeds() const noexcept { return speeds_; }
  const std::vector<double>& speed_weights() const noexcept { return speed_weights_; }
  const std::vector<double>& mus() const noexcept { return mus_; }
  const std::vector<double>& mu_weights() const noexcept { return mu_weights_; }

  template <class F>
  auto integrate(F&& f) const {
    decltype(f(nodes_[0])) sum{};
    for (const auto& n : nodes_) sum += n.weight * f(n);
    return sum;
  }

  /// Largest speed whose isotropic weight share exceeds `share` of the total
  /// for the profile `b`; the phase resolution guard uses it as |v|_max.
  double significant_speed(const std::function<double(double)>& b, double share = 1e-10) const {
    double total = 0.0;
    for (std::size_t a = 0; a < speeds_.size(); ++a) total += speed_weights_[a] * std::abs(b(speeds_[a]));
    double vmax = 0.0;
    for (std::size_t a = 0; a < speeds_.size(); ++a)
      if (speed_weights_[a] * std::abs(b(speeds_[a])) > share * total) vmax = std::max(vmax, speeds_[a]);
    return vmax;
  }

 private:
  int n_speed_, n_mu_;
  SpeedMap map_;
  std::vector<Node> nodes_;
  std::vector<double> speeds_, speed_weights_, mus_, mu_weights_;
};

// ---------------------------------------------------------------------------
// Radial profile families.

/// Spatial factor a(r) with its transform a^(k) = (4 pi / k) \int a(r) r sin(k r) dr.
struct SpatialProfile {
  enum class Kind { Gaussian, NeutralGaussian } kind = Kind::Gaussian;
  double sigma = 1.0;

  static SpatialProfile by_name(const std::string& name, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("spatial profile width must be positive");
    if (name == "gaussian") return {Kind::Gaussian, sigma};
    if (name == "neutral_gaussian") return {Kind::NeutralGaussian, sigma};
    throw ConfigError("unknown spatial profile '" + name + "' (expected gaussian|neutral_gaussian)");
  }
  std::string name() const { return kind == Kind::Gaussian ? "gaussian" : "neutral_gaussian"; }

  double value(double r) const {
    const double q = r * r / (sigma * sigma);
    if (kind == Kind::Gaussian) return std::exp(-q);
    return (1.0 - 2.0 / 3.0 * q) * std::exp(-q);
  }
  double transform(double k) const {
    const double g = std::pow(pi, 1.5) * sigma * sigma * sigma * std::exp(-0.25 * k * k * sigma * sigma);
    if (kind == Kind::Gaussian) return g;
    return sigma * sigma * k * k / 6.0 * g;  // zero net charge: vanishes at k = 0
  }
};

/// Isotropic velocity factor b(|v|) with unit mass and its transform b^(eta).
class VelocityProfile {
 public:
  enum class Kind { Poisson, Gaussian, Compact };

  static VelocityProfile by_name(const std::string& name, double support = 4.0) {
    if (name == "poisson") return VelocityProfile(Kind::Poisson, support);
    if (name == "gaussian") return VelocityProfile(Kind::Gaussian, support);
    if (name == "compact") return VelocityProfile(Kind::Compact, support);
    throw ConfigError("unknown velocity profile '" + name + "' (expected poisson|gaussian|compact)");
  }

  Kind kind() const noexcept { return kind_; }
  std::string name() const {
    switch (kind_) {
      case Kind::Poisson: return "poisson";
      case Kind::Gaussian: return "gaussian";
      default: return "compact";
    }
  }
  double support() const noexcept { return support_; }

  double value(double s) const {
    switch (kind_) {
      case Kind::Poisson: {
        const double q = 1.0 + s * s;
        return 1.0 / (pi * pi * q * q);
      }
      case Kind::Gaussian: return std::pow(2.0 * pi, -1.5) * std::exp(-0.5 * s * s);
      default: {
        if (s >= support_) return 0.0;
        const double q = 1.0 - s * s / (support_ * support_);
        return compact_norm_ * q * q * q * q;
      }
    }
  }

  double derivative(double s) const {
    switch (kind_) {
      case Kind::Poisson: {
        const double q = 1.0 + s * s;
        return -4.0 * s / (pi * pi * q * q * q);
      }
      case Kind::Gaussian: return -s * value(s);
      default: {
        if (s >= support_) return 0.0;
        const double V2 = support_ * support_;
        const double q = 1.0 - s * s / V2;
        return compact_norm_ * 4.0 * q * q * q * (-2.0 * s / V2);
      }
    }
  }

  /// b^(eta) = \int b(v) e^{-i v.eta} dv for |eta| = eta.
  double transform(double eta) const {
    if (eta < 0.0) throw std::invalid_argument("velocity transform: eta must be nonnegative");
    switch (kind_) {
      case Kind::Poisson: return std::exp(-eta);
      case Kind::Gaussian: return std::exp(-0.5 * eta * eta);
      default: {
        const double V = support_;
        const int panels = std::max(8, static_cast<int>(std::ceil(eta * V / pi)) * 2);
        return 4.0 * pi * quad::integrate_composite([&](double r) { return value(r) * r * r * sinc(eta * r); }, 0.0,
                                                    V, panels, 16);
      }
    }
  }

  /// sup_v <v>^{4.5} |b(v)|, the weighted bound required of admissible data
  /// (infinite for the Poisson profile, whose decay is only |v|^{-4}).
  double weighted_sup() const {
    if (kind_ == Kind::Poisson) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    const double top = kind_ == Kind::Compact ? support_ : 40.0;
    for (int i = 0; i <= 4000; ++i) {
      const double s = top * i / 4000.0;
      m = std::max(m, std::pow(1.0 + s * s, 2.25) * std::abs(value(s)));
    }
    return m;
  }

  /// Speed map suited to the profile: finite for compact support, algebraic otherwise.
  SpeedMap natural_map() const {
    if (kind_ == Kind::Compact) return SpeedMap::finite(support_);
    if (kind_ == Kind::Gaussian) return SpeedMap::finite(8.0);  // mass beyond |v| = 8 is below 1e-13
    return SpeedMap::algebraic(1.0);
  }

 private:
  VelocityProfile(Kind kind, double support) : kind_(kind), support_(support) {
    if (kind == Kind::Compact) {
      if (!(support > 0.0)) throw ConfigError("compact velocity support must be positive");
      compact_norm_ = 1.0;
      const double mass = 4.0 * pi * quad::integrate_composite([&](double s) { return value(s) * s * s; }, 0.0,
                                                               support, 8, 20);
      compact_norm_ = 1.0 / mass;
    }
  }

  Kind kind_;
  double support_ = 4.0;
  double compact_norm_ = 1.0;
};

/// f0(x, v) = eps a(|x|) b(|v|).
struct InitialDatum {
  SpatialProfile spatial;
  VelocityProfile velocity = VelocityProfile::by_name("poisson");
  double amplitude = 1.0;

  double value(double r, double speed) const { return amplitude * spatial.value(r) * velocity.value(speed); }
  /// Spatial transform at frequency k of f0(., v): eps a^(k) b(|v|).
  double transform_x(double k, double speed) const {
    return amplitude * spatial.transform(k) * velocity.value(speed);
  }
  /// \int f0 dv as a function of r.
  double density(double r) const { return amplitude * spatial.value(r); }
  /// \int\int |f0| dx dv.
  double total_abs_mass() const {
    const double a1 = 4.0 * pi * quad::integrate_half_line([&](double r) { return std::abs(spatial.value(r)) * r * r; },
                                                           spatial.sigma, 32, 20);
    return std::abs(amplitude) * a1;
  }
};

}  // namespace landau

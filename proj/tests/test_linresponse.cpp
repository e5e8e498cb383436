#include <gtest/gtest.h>

#include <random>

#include "landau/diagnostics.hpp"
#include "landau/linresponse.hpp"

using namespace landau;

namespace {
InitialDatum datum(const std::string& space, double sigma, const std::string& vel, double eps = 1.0,
                   double support = 4.0) {
  return {SpatialProfile::by_name(space, sigma), VelocityProfile::by_name(vel, support), eps};
}
}  // namespace

TEST(FreeStreaming, EquilibriumVelocityProfile) {
  const auto f0 = datum("gaussian", 1.0, "poisson", 0.3);
  const double k = 0.7;
  const auto h = free_streaming_forcing(f0, k, 0.1, 100);
  const double ak = 0.3 * std::pow(pi, 1.5) * std::exp(-0.25 * k * k);
  for (std::size_t n = 0; n < h.size(); ++n) EXPECT_NEAR(h[n].real(), ak * std::exp(-h.time(n) * k), 1e-14);
  EXPECT_NEAR(h[0].real(), ak, 1e-14);
}

TEST(FreeStreaming, GaussianQuadratureMatchesClosedForm) {
  const auto f0 = datum("gaussian", 1.0, "gaussian");
  const VelocityQuadrature vq(64, 32, f0.velocity.natural_map());
  const double k = 1.0;  // t k <= 20
  Warnings w;
  const auto hq = free_streaming_forcing_quadrature(f0, vq, k, 0.1, 200, 40.0, &w);
  const auto hc = free_streaming_forcing(f0, k, 0.1, 200);
  EXPECT_LT(max_abs_diff(hq, hc), 1e-6 * hc.sup_abs());
  EXPECT_FALSE(w.empty());  // t k |v|max = 20 * 8 exceeds the default phase limit
}

TEST(FreeStreaming, PhaseGuardWarns) {
  const auto f0 = datum("gaussian", 1.0, "gaussian");
  const VelocityQuadrature vq(16, 8, f0.velocity.natural_map());
  Warnings w;
  free_streaming_forcing_quadrature(f0, vq, 2.0, 0.1, 400, 40.0, &w);
  EXPECT_FALSE(w.empty());
}

TEST(LinearRun, ModesAreDampedCosines) {
  const auto f0 = datum("gaussian", 1.0, "poisson");
  const auto kgrid = log_kgrid(16, 1e-2, 5.0);
  const auto run = solve_linear(f0, kgrid, 1e-3, 10.0);
  for (std::size_t i = 0; i < kgrid.size(); ++i) {
    const double k = kgrid[i], ak = f0.spatial.transform(k);
    for (std::size_t n = 0; n <= run.n_steps; n += 97) {
      const double t = run.time(n);
      EXPECT_NEAR(run.rho_hat[i][n].real(), ak * std::exp(-t * k) * std::cos(t), 1e-5 * ak);
      EXPECT_LE(std::abs(run.rho_hat[i][n]), ak * std::exp(-t * k) * (1.0 + 1e-5));
      EXPECT_NEAR(run.field_magnitude(i, n), std::abs(run.rho_hat[i][n]) / k, 1e-15);
    }
  }
}

TEST(LinearRun, ZeroAmplitudeGivesZero) {
  const auto run = solve_linear(datum("gaussian", 1.0, "poisson", 0.0), log_kgrid(8, 1e-2, 5.0), 0.05, 5.0);
  for (std::size_t n = 0; n <= run.n_steps; ++n) {
    EXPECT_EQ(run.sup_abs_field(n), 0.0);
    EXPECT_EQ(run.l1_rho(n), 0.0);
  }
}

TEST(LinearRun, ReconstructionAtTimeZero) {
  // rho(r, 0) = a(r) and e(r, 0) = r^{-2} \int_0^r a s^2 ds for the unit-mass velocity factor
  const auto f0 = datum("gaussian", 1.0, "poisson");
  const auto run = solve_linear(f0, log_kgrid(4096, 1e-4, 40.0), 0.05, 0.05);  // trapezoid in k: O(dk^2)
  for (double r : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(run.rho_at(r, 0), std::exp(-r * r), 1e-5) << r;
  for (double r : {0.5, 1.0, 3.0}) {
    const double q = quad::integrate([](double s) { return std::exp(-s * s) * s * s; }, 0.0, r, 40) / (r * r);
    EXPECT_NEAR(run.field_at(r, 0), q, 1e-5) << r;
  }
  EXPECT_EQ(run.field_at(0.0, 0), 0.0);
}

TEST(LinearRun, ZeroCrossingsSpacedByPi) {
  const auto f0 = datum("gaussian", 1.0, "poisson");
  const auto run = solve_linear(f0, {0.05}, 0.01, 80.0);
  std::vector<double> t, v;
  for (std::size_t n = 0; n <= run.n_steps; ++n) {
    t.push_back(run.time(n));
    v.push_back(run.rho_hat[0][n].real());
  }
  const auto fit = fit_oscillation(t, v, 5.0);
  for (std::size_t i = 1; i < fit.zeros.size(); ++i) EXPECT_NEAR(fit.zeros[i] - fit.zeros[i - 1], pi, 0.03);
}

TEST(Decomposition, RepIClosedForm) {
  const double k = 0.8;
  const auto h = ModeSeries::sample(k, 1e-3, 10000, [k](double t) { return cplx(std::exp(-t * k)); });
  const auto d = decompose_repI(h);
  for (std::size_t n = 0; n < h.size(); n += 250) {
    const double t = h.time(n);
    EXPECT_LT(std::abs(d.t_part[n] + std::exp(-t * k) * (std::exp(I * t) - 1.0)), 1e-6);
    EXPECT_LT(std::abs(d.reconstruct()[n] - std::exp(-t * k) * std::cos(t)), 1e-6);
  }
  const auto zero = decompose_repI(ModeSeries::sample(k, 0.1, 10, [](double) { return cplx(0.0); }));
  EXPECT_EQ(zero.r_part.sup_abs() + zero.t_part.sup_abs(), 0.0);
}

TEST(Decomposition, RepIMatchesResolventOnRandomRealForcings) {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double k : {0.1, 0.5, 2.0}) {
    const double a = u(rng), b = u(rng), w = 1.5 * u(rng);
    const auto h = ModeSeries::sample(k, 0.005, 4000, [&](double t) {
      return cplx((a + b * std::cos(w * t)) * std::exp(-0.2 * t));
    });
    const auto rec = decompose_repI(h).reconstruct();
    EXPECT_LT(max_abs_diff(rec, apply_resolvent(h)), 1e-4 * h.sup_abs()) << k;
  }
}

TEST(Decomposition, RepIIAgreesWithRepIAtLowFrequency) {
  const auto f0 = datum("gaussian", 1.0, "compact", 1.0, 4.0);
  const VelocityQuadrature vq(48, 48, SpeedMap::finite(4.0));
  const double k = 0.05, dt = 0.01;
  const std::size_t steps = 4000;
  const auto h = free_streaming_forcing_quadrature(f0, vq, k, dt, steps);
  const auto rep1 = decompose_repI(h).reconstruct();
  const auto d2 = decompose_repII(f0, vq, k, dt, steps);
  const auto rep2 = d2.reconstruct();
  const auto volterra = solve_volterra_march(h);
  EXPECT_LT(max_abs_diff(rep1, rep2), 1e-4 * rep1.sup_abs());
  EXPECT_LT(max_abs_diff(volterra, rep2), 1e-4 * rep1.sup_abs());
  // nodewise gain |D^2/(1 + D^2)| <= |D|^2 <= (k (1 + k V))^2 bounds R^II
  const double bound = std::pow(k * std::hypot(1.0, 4.0), 2) / (1.0 - std::pow(k * std::hypot(1.0, 4.0), 2));
  double mass = vq.integrate([&](const auto& n) { return std::abs(f0.transform_x(k, n.speed)); });
  EXPECT_LE(d2.r_part.sup_abs(), bound * mass);
}

TEST(Decomposition, RepIIConstantDLimit) {
  // data carried only by slow nodes: D -> k, so R^II -> k^2 / (1 + k^2) H
  const VelocityQuadrature vq(16, 8, SpeedMap::finite(1e-6));
  const double k = 0.3;
  auto data = [](double, double) { return cplx(1.0); };
  const auto d = decompose_repII(data, vq, k, 0.1, 50);
  const auto h = free_streaming_forcing_quadrature(data, vq, k, 0.1, 50, 1e-6);
  for (std::size_t n = 0; n < h.size(); ++n) EXPECT_LT(std::abs(d.r_part[n] - k * k / (1.0 + k * k) * h[n]), 1e-9);
}

TEST(Decomposition, RepIIRefusesResonantData) {
  const auto f0 = datum("gaussian", 1.0, "poisson");
  const VelocityQuadrature vq(16, 8);
  EXPECT_THROW(decompose_repII(f0, vq, 0.5, 0.1, 10), std::invalid_argument);
}

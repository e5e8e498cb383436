#include <gtest/gtest.h>

#include "landau/nonlinear.hpp"

using namespace landau;

namespace {

InitialDatum neutral(double eps, double sigma = 2.0) {
  return {SpatialProfile::by_name("neutral_gaussian", sigma), VelocityProfile::by_name("poisson"), eps};
}

NonlinearParams small_params(double t_max) {
  NonlinearParams p;
  p.n_r = 48;
  p.r_max = 24.0;
  p.n_u = 16;
  p.n_l = 8;
  p.dt = 0.05;
  p.t_max = t_max;
  p.marker_refine = 1;
  return p;
}

/// e(r, s) = A r e^{-r^2/4} / <s>^2
struct BumpField {
  double amp;
  double operator()(double r, double s) const { return amp * r * std::exp(-0.25 * r * r) / (1.0 + s * s); }
};

double sup(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(RelativeL2, Basics) {
  const RadialGrid g(9, 4.0);
  std::vector<std::vector<double>> b(3, std::vector<double>(g.size()));
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t i = 0; i < g.size(); ++i) b[n][i] = std::sin(1.0 + n + i);
  auto a = b;
  EXPECT_EQ(relative_l2(a, b, g), 0.0);
  for (auto& row : a)
    for (double& x : row) x *= 1.03;
  EXPECT_NEAR(relative_l2(a, b, g), 0.03, 1e-12);
}

TEST(Direct, ZeroAmplitudeStaysZero) {
  const auto res = run_direct(neutral(0.0), small_params(2.0));
  for (std::size_t n = 0; n <= res.history.steps(); ++n) {
    EXPECT_EQ(sup(res.history.rho[n]), 0.0);
    EXPECT_EQ(sup(res.history.e[n]), 0.0);
  }
}

TEST(Direct, FieldIsPoissonOfDensity) {
  const auto res = run_direct(neutral(1e-3), small_params(2.0));
  const auto& h = res.history;
  for (std::size_t n : {std::size_t{0}, h.steps()}) {
    const auto e = radial_poisson(h.grid, h.rho[n]);
    EXPECT_EQ(h.e[n][0], 0.0);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_DOUBLE_EQ(h.e[n][i], e[i]);
  }
}

TEST(Direct, ConservesPerturbationMass) {
  const auto res = run_direct(neutral(1e-3), small_params(10.0));
  EXPECT_LT(res.max_mass_drift, 1e-6);
  EXPECT_EQ(res.mass.size(), res.history.steps() + 1);
}

TEST(Direct, TracksLinearResponseAtSmallAmplitude) {
  const double eps = 1e-3;
  const auto f0 = neutral(eps);
  NonlinearParams p = small_params(40.0);
  p.n_r = 96;
  p.r_max = 40.0;
  p.n_u = 32;
  p.n_l = 16;
  p.marker_refine = 2;
  const auto res = run_direct(f0, p);
  const auto lin = solve_linear(f0, log_kgrid(512, 1e-3, 20.0), p.dt, p.t_max);
  const auto& g = res.history.grid;
  std::vector<std::vector<double>> ref(res.history.steps() + 1, std::vector<double>(g.size()));
  for (std::size_t n = 0; n < ref.size(); ++n)
    for (std::size_t i = 0; i < g.size(); ++i) ref[n][i] = lin.rho_at(g.r(i), n);
  EXPECT_LT(relative_l2(res.history.rho, ref, g), 10.0 * eps);
}

TEST(Forcing, TimeZeroIsTheInitialDensity) {
  const auto f0 = neutral(1e-3);
  const RadialGrid g(33, 16.0);
  const VelocityQuadrature vq(48, 8, f0.velocity.natural_map());
  const auto fs = assemble_forcing_N(BumpField{1e-3}, g, vq, f0, 0.0, 0.05);
  const double scale = std::abs(f0.density(0.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(fs.n2[i], 0.0);
    EXPECT_LT(std::abs(fs.n1_correction[i]), 1e-15 * scale);  // speed recomputed from components
    EXPECT_NEAR(fs.n1()[i], f0.density(g.r(i)), 2e-4 * scale) << g.r(i);
  }
}

TEST(Forcing, ZeroFieldIsFreeStreaming) {
  const auto f0 = neutral(1e-3);
  const RadialGrid g(33, 16.0);
  const VelocityQuadrature vq(64, 16, f0.velocity.natural_map());
  const double t = 3.0;
  const auto fs = assemble_forcing_N([](double, double) { return 0.0; }, g, vq, f0, t, 0.05);
  // spectral oracle: eps a^(k) b^(t k) back on the grid
  const detail::FreeFlightDensity free(f0, g);
  const auto ref = free.density(t, nullptr);
  const double scale = sup(ref);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(fs.n2[i], 0.0);
    EXPECT_LT(std::abs(fs.n1_correction[i]), 1e-12 * scale);
    EXPECT_NEAR(fs.n1()[i], ref[i], 2e-3 * scale) << g.r(i);
  }
}

TEST(Forcing, ReactionTermIsQuadratic) {
  const auto f0 = neutral(1e-3);
  const RadialGrid g(25, 12.0);
  const VelocityQuadrature vq(16, 8, f0.velocity.natural_map());
  const double t = 4.0;
  const auto a = assemble_forcing_N(BumpField{1e-2}, g, vq, f0, t, 0.05);
  const auto b = assemble_forcing_N(BumpField{5e-3}, g, vq, f0, t, 0.05);
  const double ratio = sup(a.n2) / sup(b.n2);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
  EXPECT_GT(sup(a.n2), 0.0);
}

TEST(Forcing, GuardRejectsLargeIncrements) {
  const auto f0 = neutral(1e-3);
  const RadialGrid g(9, 4.0);
  const VelocityQuadrature vq(4, 4, f0.velocity.natural_map());
  EXPECT_THROW(assemble_forcing_N(BumpField{1e3}, g, vq, f0, 1.0, 0.05, Equilibrium::poisson(), 1, 0.1), BlowUpError);
}

TEST(Picard, ZeroAmplitudeConvergesAtOnce) {
  NonlinearParams p = small_params(2.0);
  p.n_r = 24;
  p.r_max = 12.0;
  p.n_u = 8;
  p.n_l = 4;
  const auto res = run_picard(neutral(0.0), p);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  for (const auto& row : res.history.e) EXPECT_EQ(sup(row), 0.0);
}

TEST(Picard, ContractsAndSatisfiesVolterra) {
  NonlinearParams p = small_params(6.0);
  p.n_r = 32;
  p.r_max = 16.0;
  p.n_u = 12;
  p.n_l = 6;
  const auto res = run_picard(neutral(1e-3), p);
  ASSERT_TRUE(res.converged);
  ASSERT_GE(res.log.size(), 2u);
  EXPECT_LE(res.iterations, 6);
  EXPECT_LE(res.log[1].ratio, 0.1);
  // the nonlinear correction is O(eps) against the linear iterate
  const double d = relative_l2(res.history.e, res.linear.e, res.history.grid);
  EXPECT_GT(d, 0.0);
  EXPECT_LT(d, 0.05);
  for (std::size_t j = 0; j < res.rho_hat.size(); j += 5) {
    const auto r = volterra_residual(res.rho_hat[j], res.forcing_hat[j]);
    // resolvent and product-trapezoid march differ by the O(dt^2) consistency error
    EXPECT_LT(r.sup_abs(), p.dt * p.dt * res.forcing_hat[j].sup_abs() + 1e-14) << j;
  }
}

TEST(Picard, StrideTimesIncludeEnd) {
  NonlinearParams p;
  p.dt = 0.05;
  p.t_max = 1.03;
  p.picard_stride = 10;
  const auto ts = picard_sample_times(p);
  EXPECT_EQ(ts.front(), 0.0);
  EXPECT_NEAR(ts.back(), p.n_steps() * p.dt, 1e-12);
}

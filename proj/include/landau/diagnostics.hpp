#pragma once

// Littlewood-Paley band filters on radial data, B0-type norm proxies, decay-rate
// and oscillation-frequency fits, sliding-window static/oscillatory fits and the
// scattering (deviation convergence) diagnostic.

#include <optional>

#include "characteristics.hpp"
#include "equilibrium.hpp"
#include "radial.hpp"

namespace landau {

// ---------------------------------------------------------------------------
// Band filters.

/// phi = 1 on [0, 5/4], 0 beyond 8/5, quintic smoothstep (C^2) in between.
inline double lp_bump(double x) {
  x = std::abs(x);
  constexpr double a = 1.25, b = 1.6;
  if (x <= a) return 1.0;
  if (x >= b) return 0.0;
  const double y = (x - a) / (b - a);
  return 1.0 - y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
}

/// phi_k(x) = phi(x / 2^k) - phi(x / 2^{k-1}).
inline double lp_band(int k, double x) {
  return lp_bump(x / std::ldexp(1.0, k)) - lp_bump(x / std::ldexp(1.0, k - 1));
}

class BandFilterBank {
 public:
  explicit BandFilterBank(const RadialGrid& grid) : tf_(grid) {
    const double k_nyq = pi / grid.dr();
    lo_ = static_cast<int>(std::ceil(std::log2(8.0 * pi / grid.r_max())));
    hi_ = static_cast<int>(std::floor(std::log2(k_nyq / 4.0)));
    const auto& k = tf_.frequencies();
    all_lo_ = static_cast<int>(std::floor(std::log2(k.front() / 1.6))) + 1;
    all_hi_ = static_cast<int>(std::ceil(std::log2(k.back() / 1.25)));
  }

  const RadialGrid& grid() const noexcept { return tf_.grid(); }
  const RadialTransform& transform() const noexcept { return tf_; }
  /// Resolvable band indices: 2^k in [8 pi / R_max, k_Nyquist / 4].
  int lowest() const noexcept { return lo_; }
  int highest() const noexcept { return hi_; }
  /// Bands whose sum is 1 on every grid frequency.
  int covering_lowest() const noexcept { return all_lo_; }
  int covering_highest() const noexcept { return all_hi_; }

  /// Multiply the radial transform by m(k) and transform back.
  template <class M>
  std::vector<double> apply(const std::vector<double>& f, M&& multiplier) const {
    auto fh = tf_.forward(f);
    const auto& k = tf_.frequencies();
    for (std::size_t j = 0; j < fh.size(); ++j) fh[j] *= multiplier(k[j]);
    return tf_.inverse(fh);
  }

  /// P_k f for a resolvable band; out-of-range bands are rejected.
  std::vector<double> filter(const std::vector<double>& f, int k) const {
    if (k < lo_ || k > hi_)
      throw std::out_of_range("lp_filter: band " + std::to_string(k) + " outside the resolvable range [" +
                              std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    return project(f, k);
  }

  /// P_k f without the resolvability check.
  std::vector<double> project(const std::vector<double>& f, int k) const {
    return apply(f, [k](double x) { return lp_band(k, x); });
  }

  /// P_{<=k} f = phi(|xi| / 2^k) f.
  std::vector<double> low_pass(const std::vector<double>& f, int k) const {
    return apply(f, [k](double x) { return lp_bump(x / std::ldexp(1.0, k)); });
  }

 private:
  RadialTransform tf_;
  int lo_, hi_, all_lo_, all_hi_;
};

inline std::vector<double> lp_filter(const BandFilterBank& bank, const std::vector<double>& f, int k) {
  return bank.filter(f, k);
}

// ---------------------------------------------------------------------------
// Norm proxies.

struct NormReport {
  double t = 0.0;
  double b0 = 0.0;    // sup_k <t>^3 |P_k rho|_inf + |P_k rho|_1
  double stat = 0.0;  // <t>^{1-2 delta} B0(<grad> rho)
  double osc = 0.0;   // <t>^{-delta} B0(rho) + <t>^{1-2 delta} B0(grad_{x,t} rho)
  std::vector<double> per_band;
  int band_lo = 0;
};

inline constexpr double norm_delta = 1e-4;

namespace detail {
inline double b0_proxy(const BandFilterBank& bank, const std::vector<double>& f, double t, std::vector<double>* bands,
                       const std::vector<double>* dt_f = nullptr, bool gradient = false) {
  const auto& g = bank.grid();
  const double w3 = std::pow(jbracket(t), 3);
  double best = 0.0;
  for (int k = bank.covering_lowest(); k <= bank.covering_highest(); ++k) {
    std::vector<double> pk = bank.project(f, k);
    if (gradient) {
      // |d/dr P_k f| by central differences, plus |P_k d_t f| when supplied
      std::vector<double> d(pk.size(), 0.0);
      const double h = g.dr();
      for (std::size_t i = 1; i + 1 < pk.size(); ++i) d[i] = (pk[i + 1] - pk[i - 1]) / (2.0 * h);
      d.back() = (pk[pk.size() - 1] - pk[pk.size() - 2]) / h;
      if (dt_f) {
        const auto pt = bank.project(*dt_f, k);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(d[i]) + std::abs(pt[i]);
      }
      pk = std::move(d);
    }
    const double v = w3 * g.sup(pk) + g.l1(pk);
    if (bands) bands->push_back(v);
    best = std::max(best, v);
  }
  return best;
}
}  // namespace detail

/// Norm report of one snapshot; `drho_dt` (optional) enters the oscillatory weighting.
inline NormReport bnorm(const BandFilterBank& bank, const std::vector<double>& rho, double t,
                        const std::vector<double>* drho_dt = nullptr) {
  NormReport rep;
  rep.t = t;
  rep.band_lo = bank.covering_lowest();
  rep.b0 = detail::b0_proxy(bank, rho, t, &rep.per_band);
  const auto bracket_grad = bank.apply(rho, [](double k) { return jbracket(k); });
  const double tb = jbracket(t);
  rep.stat = std::pow(tb, 1.0 - 2.0 * norm_delta) * detail::b0_proxy(bank, bracket_grad, t, nullptr);
  rep.osc = std::pow(tb, -norm_delta) * rep.b0 +
            std::pow(tb, 1.0 - 2.0 * norm_delta) * detail::b0_proxy(bank, rho, t, nullptr, drho_dt, true);
  return rep;
}

// ---------------------------------------------------------------------------
// Rate fits.

enum class FitMethod { EnvelopePeaks, AllSamples };

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double t_min = 0.0, t_max = 0.0;
  FitMethod method = FitMethod::EnvelopePeaks;
  std::size_t points = 0;
  double slope_stderr = 0.0;
  double exp_r2 = 0.0;          // R^2 of log(value) against t
  bool model_mismatch = false;  // power law rejected (R^2 < 0.9 or the exponential fits better)
};

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0, slope_stderr = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("least_squares_line: need two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

/// Power-law fit log(value) = intercept + slope log(t) on [t_min, t_max].
/// EnvelopePeaks first extracts the local maxima of the series.
inline RateFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& value, double t_min,
                              double t_max, FitMethod method = FitMethod::EnvelopePeaks) {
  if (t.size() != value.size()) throw std::invalid_argument("fit_decay_rate: length mismatch");
  std::vector<double> lt, lv, tt;
  auto take = [&](std::size_t i) {
    if (t[i] < t_min || t[i] > t_max || !(value[i] > 0.0) || !(t[i] > 0.0)) return;
    lt.push_back(std::log(t[i]));
    lv.push_back(std::log(value[i]));
    tt.push_back(t[i]);
  };
  if (method == FitMethod::AllSamples) {
    for (std::size_t i = 0; i < t.size(); ++i) take(i);
  } else {
    for (std::size_t i = 1; i + 1 < t.size(); ++i)
      if (value[i] >= value[i - 1] && value[i] > value[i + 1]) take(i);
  }
  if (lt.size() < 8)
    throw std::invalid_argument("fit_decay_rate: " + std::to_string(lt.size()) +
                                " usable points in the window, at least 8 required");
  const LineFit p = least_squares_line(lt, lv);
  const LineFit e = least_squares_line(tt, lv);
  RateFit f;
  f.slope = p.slope;
  f.intercept = p.intercept;
  f.r2 = p.r2;
  f.slope_stderr = p.slope_stderr;
  f.t_min = t_min;
  f.t_max = t_max;
  f.method = method;
  f.points = lt.size();
  f.exp_r2 = e.r2;
  f.model_mismatch = p.r2 < 0.9 || e.r2 > p.r2;
  return f;
}

struct OscillationFit {
  double frequency = 0.0;
  double stderr_ = 0.0;
  double mean_spacing = 0.0;
  std::size_t crossings = 0;
  std::vector<double> zeros;
};

/// Frequency pi / (mean spacing of zero crossings) for t >= t_min.
inline OscillationFit fit_oscillation(const std::vector<double>& t, const std::vector<double>& value,
                                      double t_min = 0.0, double t_max = std::numeric_limits<double>::infinity()) {
  if (t.size() != value.size()) throw std::invalid_argument("fit_oscillation: length mismatch");
  OscillationFit f;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i] < t_min || t[i + 1] > t_max) continue;
    const double a = value[i], b = value[i + 1];
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
      if (b == 0.0 && i + 2 < t.size() && value[i + 2] * a > 0.0) continue;  // touch, not a crossing
      f.zeros.push_back(t[i] + (t[i + 1] - t[i]) * a / (a - b));
    }
  }
  f.crossings = f.zeros.size();
  if (f.crossings < 20)
    throw std::invalid_argument("fit_oscillation: " + std::to_string(f.crossings) +
                                " zero crossings, at least 20 required");
  std::vector<double> gaps;
  for (std::size_t i = 1; i < f.zeros.size(); ++i) gaps.push_back(f.zeros[i] - f.zeros[i - 1]);
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= gaps.size();
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var /= std::max<std::size_t>(1, gaps.size() - 1);
  f.mean_spacing = mean;
  f.frequency = pi / mean;
  f.stderr_ = pi / (mean * mean) * std::sqrt(var / gaps.size());
  return f;
}

// ---------------------------------------------------------------------------
// Static / oscillatory window fit: rho(t) ~ c0 + Re(c1 e^{-it}) per window.

struct StatOscWindow {
  double t_begin = 0.0, t_end = 0.0;
  std::vector<double> c0;
  std::vector<cplx> c1;
  std::vector<double> residual;  // rms residual per grid point
};

struct StatOscFit {
  std::vector<StatOscWindow> windows;
  double window = 0.0;
};

/// Least squares of series[n][i] against [1, cos t, sin t] on sliding windows of
/// length `window` with 50% overlap. Re(c1 e^{-it}) = Re(c1) cos t + Im(c1) sin t.
inline StatOscFit fit_stat_osc(const std::vector<double>& t, const std::vector<std::vector<double>>& series,
                               double window = 6.0 * pi, double min_window = 6.0 * pi) {
  if (t.size() != series.size() || t.empty()) throw std::invalid_argument("fit_stat_osc: length mismatch");
  if (window < min_window - 1e-12)
    throw std::invalid_argument("fit_stat_osc: window shorter than the minimum carrier coverage");
  StatOscFit out;
  out.window = window;
  const std::size_t P = series.front().size();
  for (double tb = t.front(); tb + window <= t.back() + 1e-9; tb += 0.5 * window) {
    const double te = tb + window;
    double A[3][3] = {{0}}, total = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < t.size(); ++n)
      if (t[n] >= tb - 1e-12 && t[n] <= te + 1e-12) idx.push_back(n);
    for (std::size_t n : idx) {
      const double b[3] = {1.0, std::cos(t[n]), std::sin(t[n])};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) A[r][c] += b[r] * b[c];
      total += 1.0;
    }
    // Cholesky of the 3x3 normal matrix; reject ill-conditioned windows
    double L[3][3] = {{0}};
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c <= r; ++c) {
        double s = A[r][c];
        for (int q = 0; q < c; ++q) s -= L[r][q] * L[c][q];
        if (r == c) {
          if (!(s > 1e-10 * total)) throw std::invalid_argument("fit_stat_osc: ill-conditioned normal equations");
          L[r][r] = std::sqrt(s);
          dmin = std::min(dmin, s);
          dmax = std::max(dmax, s);
        } else {
          L[r][c] = s / L[c][c];
        }
      }
    if (dmax / dmin > 1e8) throw std::invalid_argument("fit_stat_osc: ill-conditioned normal equations");
    StatOscWindow w;
    w.t_begin = tb;
    w.t_end = te;
    w.c0.resize(P);
    w.c1.resize(P);
    w.residual.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
      double rhs[3] = {0, 0, 0};
      for (std::size_t n : idx) {
        rhs[0] += series[n][i];
        rhs[1] += series[n][i] * std::cos(t[n]);
        rhs[2] += series[n][i] * std::sin(t[n]);
      }
      double y[3], x[3];
      for (int r = 0; r < 3; ++r) {
        double s = rhs[r];
        for (int q = 0; q < r; ++q) s -= L[r][q] * y[q];
        y[r] = s / L[r][r];
      }
      for (int r = 2; r >= 0; --r) {
        double s = y[r];
        for (int q = r + 1; q < 3; ++q) s -= L[q][r] * x[q];
        x[r] = s / L[r][r];
      }
      w.c0[i] = x[0];
      w.c1[i] = cplx(x[1], x[2]);
      double sse = 0.0;
      for (std::size_t n : idx) {
        const double m = x[0] + x[1] * std::cos(t[n]) + x[2] * std::sin(t[n]);
        sse += (series[n][i] - m) * (series[n][i] - m);
      }
      w.residual[i] = std::sqrt(sse / idx.size());
    }
    out.windows.push_back(std::move(w));
  }
  if (out.windows.empty()) throw std::invalid_argument("fit_stat_osc: series shorter than one window");
  return out;
}

// ---------------------------------------------------------------------------
// Scattering: convergence of the deviations Y~, W~ at s = 0 as the anchor time grows.

struct ScatteringReport {
  std::vector<double> horizons;
  std::vector<double> pair_t;       // t with 2t also a horizon
  std::vector<double> delta;        // Delta(t, 2t)
  std::vector<double> consecutive;  // Delta(t_j, t_{j+1})
  std::vector<double> profile;      // sup |f(x + t v, v, t) - f(x + 2t v, v, 2t)|
  std::optional<RateFit> fit;
};

/// Seeds are (x, v) pairs. `f0(x, v)` and the equilibrium give the profile proxy
/// through f = f0(X0, V0) + M0(V0) - M0(v).
template <class Field, class F0>
ScatteringReport scattering_diagnostic(const Field& E, const std::vector<std::pair<Vec3, Vec3>>& seeds,
                                       const std::vector<double>& horizons, double ds, F0&& f0,
                                       const Equilibrium& eq, int workers = 1, bool fit = true) {
  ScatteringReport rep;
  rep.horizons = horizons;
  const std::size_t H = horizons.size(), S = seeds.size();
  std::vector<std::vector<Vec3>> Y(H, std::vector<Vec3>(S)), W(H, std::vector<Vec3>(S));
  std::vector<std::vector<double>> prof(H, std::vector<double>(S));
  for (std::size_t h = 0; h < H; ++h) {
    const double t = horizons[h];
    const std::size_t n = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(t / ds)));
    parallel_for(S, workers, [&](std::size_t p) {
      const auto& [x, v] = seeds[p];
      CharacteristicOptions opt;
      const Trajectory tr = integrate_backward(x, v, t, n, E, opt);
      Y[h][p] = tr.Y.back();
      W[h][p] = tr.W.back();
      const Vec3 X0 = x + Y[h][p], V0 = v + W[h][p];
      prof[h][p] = f0(X0, V0) + eq.value(V0) - eq.value(v);
    });
  }
  auto delta = [&](std::size_t a, std::size_t b) {
    double m = 0.0;
    for (std::size_t p = 0; p < S; ++p) m = std::max(m, norm(Y[b][p] - Y[a][p]) + norm(W[b][p] - W[a][p]));
    return m;
  };
  for (std::size_t h = 0; h + 1 < H; ++h) rep.consecutive.push_back(delta(h, h + 1));
  for (std::size_t a = 0; a < H; ++a)
    for (std::size_t b = a + 1; b < H; ++b)
      if (std::abs(horizons[b] - 2.0 * horizons[a]) < 1e-9 * horizons[b]) {
        rep.pair_t.push_back(horizons[a]);
        rep.delta.push_back(delta(a, b));
        double m = 0.0;
        for (std::size_t p = 0; p < S; ++p) m = std::max(m, std::abs(prof[b][p] - prof[a][p]));
        rep.profile.push_back(m);
      }
  if (fit && rep.pair_t.size() >= 8)
    rep.fit = fit_decay_rate(rep.pair_t, rep.delta, rep.pair_t.front(), rep.pair_t.back(), FitMethod::AllSamples);
  return rep;
}

}  // namespace landau

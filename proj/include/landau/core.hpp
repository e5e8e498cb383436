#pragma once

// Shared vocabulary types for the toolkit.
//
// Fourier convention (project-wide): f^(xi) = \int f(x) e^{-i x.xi} dx, inverse
// carries (2 pi)^{-3}. Under it the Poisson equilibrium has M0^(xi) = e^{-|xi|}.
// Time is measured in units of the inverse plasma frequency.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace landau {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Japanese bracket <x> = sqrt(1 + x^2).
inline double jbracket(double x) { return std::sqrt(1.0 + x * x); }

inline double sinc(double x) { return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

// ---------------------------------------------------------------------------
// Errors. Each solver failure class maps onto a CLI exit code.

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int blow_up = 3;
inline constexpr int non_convergence = 4;
inline constexpr int io = 5;
inline constexpr int unknown_key = 6;
}  // namespace exit_codes

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int code = exit_codes::config) : Error(what, code) {}
};

/// Field blow-up guard fired (step rejection) or deposition went non-finite.
class BlowUpError : public Error {
 public:
  explicit BlowUpError(const std::string& what) : Error(what, exit_codes::blow_up) {}
};

/// Iteration failed to converge: root finder, Picard loop, deviation fixed point.
class NonConvergenceError : public Error {
 public:
  explicit NonConvergenceError(const std::string& what, std::vector<double> history = {})
      : Error(what, exit_codes::non_convergence), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, exit_codes::io) {}
};

/// Collects non-fatal warnings (aliasing guards, out-of-box field samples, leakage).
class Warnings {
 public:
  void add(std::string message) {
    std::lock_guard lock(mutex_);
    if (std::find(items_.begin(), items_.end(), message) == items_.end()) items_.push_back(std::move(message));
  }
  std::vector<std::string> items() const {
    std::lock_guard lock(mutex_);
    return items_;
  }
  bool empty() const {
    std::lock_guard lock(mutex_);
    return items_.empty();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> items_;
};

/// Worker count: explicit request if positive, else LANDAU_WORKERS, else 1.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LANDAU_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Static block partition of [0, n) over `workers` threads. fn(begin, end, worker).
/// Blocks are contiguous and assigned in order, so per-worker buffers merged by
/// worker index give results independent of scheduling.
template <class Fn>
void parallel_blocks(std::size_t n, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
    pool.emplace_back([&, b, e, w] {
      try {
        fn(b, e, w);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  parallel_blocks(n, workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace landau

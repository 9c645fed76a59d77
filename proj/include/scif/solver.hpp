#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "scif/error.hpp"

namespace scif {

struct SolveStats {
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  double wall_time = 0.0;  // seconds
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const SolveStats& stats, const std::string& what) : Error(what), stats_(stats) {}
  const SolveStats& stats() const noexcept { return stats_; }

 private:
  SolveStats stats_;
};

/// Called every `kMonitorStride` iterations with the quadratic objective
/// 0.5 x'Ax - b'x of the current iterate.
using CgMonitor = std::function<void(std::size_t iteration, double objective)>;
inline constexpr std::size_t kMonitorStride = 50;

struct CgOptions {
  double tolerance = 1e-6;
  std::size_t max_iterations = 10000;
  /// Keep iterates orthogonal to the constant vector (for singular
  /// Laplacian-type systems whose null space is the constants).
  bool zero_mean = false;
  CgMonitor monitor;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline void remove_mean(std::span<double> v) {
  if (v.empty()) return;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

}  // namespace detail

/// Jacobi-preconditioned conjugate gradient for SPD A given as a matvec
/// `apply(x, out)`. x starts at zero. Converged when both
/// ||r||_2 <= tol ||b||_2 and ||r||_inf <= tol ||b||_inf, checked on the true
/// residual. Throws ConvergenceError after max_iterations.
template <typename Apply>
SolveStats conjugate_gradient(Apply&& apply, std::span<const double> diagonal, std::span<const double> b,
                              std::span<double> x, const CgOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const std::size_t n = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  SolveStats stats;

  const double b_norm = std::sqrt(detail::dot(b, b));
  const double b_max = detail::max_abs(b);
  if (n == 0 || b_norm == 0.0) {
    stats.wall_time = elapsed();
    return stats;
  }

  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  const auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diagonal[i];
    if (opt.zero_mean) detail::remove_mean(z);
  };
  const auto converged = [&](std::span<const double> res) {
    return std::sqrt(detail::dot(res, res)) <= opt.tolerance * b_norm &&
           detail::max_abs(res) <= opt.tolerance * b_max;
  };

  precondition();
  p = z;
  double rz = detail::dot(r, z);
  std::size_t it = 0;
  while (true) {
    if (converged(r)) {
      // The recursive residual drifts; confirm against b - Ax before stopping.
      apply(std::span<const double>(x), std::span<double>(q));
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      if (converged(r)) break;
      precondition();
      p = z;
      rz = detail::dot(r, z);
    }
    if (it >= opt.max_iterations) {
      stats.iterations = it;
      stats.final_relative_residual = std::sqrt(detail::dot(r, r)) / b_norm;
      stats.wall_time = elapsed();
      throw ConvergenceError(stats, "conjugate gradient did not converge in " + std::to_string(it) +
                                        " iterations (relative residual " +
                                        std::to_string(stats.final_relative_residual) + ")");
    }
    apply(std::span<const double>(p), std::span<double>(q));
    const double pq = detail::dot(p, q);
    if (!(pq > 0.0)) {
      stats.iterations = it;
      stats.final_relative_residual = std::sqrt(detail::dot(r, r)) / b_norm;
      stats.wall_time = elapsed();
      throw ConvergenceError(stats, "conjugate gradient breakdown (operator not positive definite)");
    }
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++it;
    if (opt.monitor && it % kMonitorStride == 0) {
      double objective = 0.0;
      for (std::size_t i = 0; i < n; ++i) objective -= 0.5 * x[i] * (b[i] + r[i]);
      opt.monitor(it, objective);
    }
    precondition();
    const double rz_next = detail::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (opt.zero_mean) detail::remove_mean(x);
  stats.iterations = it;
  stats.final_relative_residual = std::sqrt(detail::dot(r, r)) / b_norm;
  stats.wall_time = elapsed();
  return stats;
}

}  // namespace scif

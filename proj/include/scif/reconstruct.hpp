#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "scif/image.hpp"
#include "scif/parallel.hpp"
#include "scif/representation.hpp"
#include "scif/solver.hpp"

namespace scif {

struct SolverConfig {
  double tolerance = 1e-6;
  std::size_t max_iterations = 10000;
  double constraint_weight = 1e4;  // lambda, gradient kind only
  unsigned threads = 0;            // channel workers; 0 = SCIF_THREADS / hardware
  /// Optional per-channel objective trace (every kMonitorStride iterations).
  std::function<void(std::uint32_t channel, std::size_t iteration, double objective)> monitor;

  void validate() const {
    if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
    if (max_iterations < 1) throw InvalidArgument("max iterations must be >= 1");
    if (!(constraint_weight >= 1.0)) throw InvalidArgument("constraint weight must be >= 1");
  }
};

struct ReconstructionResult {
  RasterImage image;                         // clamped to [0,1]
  std::vector<SolveStats> stats;             // one per channel
  std::vector<std::vector<double>> unclamped;  // planar solution per channel, before clamping
};

/// Dirichlet data for the diffusion solve: per-pixel constraint counts and
/// per-channel value sums. Samples are placed at round(p -/+ offset*n).
struct DiffusionConstraints {
  std::vector<std::uint32_t> count;
  std::vector<std::vector<double>> sum;

  bool any() const {
    return std::any_of(count.begin(), count.end(), [](std::uint32_t c) { return c > 0; });
  }
};

namespace detail {

inline std::uint32_t round_to_grid(double v, std::uint32_t extent) {
  v = std::clamp(v, 0.0, extent - 1.0);
  return static_cast<std::uint32_t>(std::lround(v));
}

inline std::vector<Vec2> normals_or_estimate(const Contour& c) {
  return c.normals.size() == c.size() ? c.normals : contour_normals(c);
}

inline ReconstructionResult finish(const SparseRepresentation& r, std::vector<std::vector<double>> planes,
                                   std::vector<SolveStats> stats) {
  ReconstructionResult out{image_from_planes(r.width, r.height, planes), std::move(stats), std::move(planes)};
  return out;
}

inline unsigned channel_threads(const SolverConfig& cfg, std::uint32_t channels) {
  return std::min<unsigned>(cfg.threads ? cfg.threads : thread_limit(), channels);
}

inline CgOptions cg_options(const SolverConfig& cfg, std::uint32_t channel, bool zero_mean) {
  CgOptions opt{cfg.tolerance, cfg.max_iterations, zero_mean, {}};
  if (cfg.monitor) opt.monitor = [m = cfg.monitor, channel](std::size_t it, double f) { m(channel, it, f); };
  return opt;
}

}  // namespace detail

inline DiffusionConstraints diffusion_constraints(const SparseRepresentation& r) {
  DiffusionConstraints dc{std::vector<std::uint32_t>(r.pixel_count(), 0),
                          std::vector<std::vector<double>>(r.channels, std::vector<double>(r.pixel_count(), 0.0))};
  const double offset = r.sample_offset;
  for (const auto& c : r.contours.contours) {
    const auto normals = detail::normals_or_estimate(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.points[i];
      const auto& n = normals[i];
      for (int side = 0; side < 2; ++side) {
        const double s = side == 0 ? -offset : offset;
        const auto qx = detail::round_to_grid(p.x + s * n.x, r.width);
        const auto qy = detail::round_to_grid(p.y + s * n.y, r.height);
        const std::size_t q = std::size_t{qy} * r.width + qx;
        ++dc.count[q];
        for (std::uint32_t ch = 0; ch < r.channels; ++ch) dc.sum[ch][q] += c.features[(i * r.channels + ch) * 2 + side];
      }
    }
  }
  return dc;
}

/// Homogeneous diffusion: per channel, the 5-point Laplace equation with
/// Neumann borders, pinned at constraint pixels. Solved by PCG on the free
/// pixels only.
inline ReconstructionResult reconstruct_diffusion(const SparseRepresentation& r, const SolverConfig& cfg = {}) {
  cfg.validate();
  validate(r);
  if (r.kind != FeatureKind::kColor) throw InvalidArgument("diffusion reconstruction needs COLOR features");
  const std::uint32_t w = r.width, h = r.height;
  const std::size_t n = r.pixel_count();
  const auto cons = diffusion_constraints(r);

  std::vector<std::vector<double>> planes(r.channels);
  std::vector<SolveStats> stats(r.channels);
  if (!cons.any()) {
    for (std::uint32_t c = 0; c < r.channels; ++c) planes[c].assign(n, r.dc_anchor[c]);
    return detail::finish(r, std::move(planes), std::move(stats));
  }

  // Free pixels get consecutive unknown indices; constrained ones are -1.
  std::vector<std::int64_t> unknown(n, -1);
  std::vector<std::size_t> free_pixels;
  for (std::size_t i = 0; i < n; ++i)
    if (cons.count[i] == 0) {
      unknown[i] = static_cast<std::int64_t>(free_pixels.size());
      free_pixels.push_back(i);
    }
  const std::size_t m = free_pixels.size();
  std::vector<double> degree(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = free_pixels[k];
    const std::uint32_t x = i % w, y = static_cast<std::uint32_t>(i / w);
    degree[k] = (x > 0) + (x + 1 < w) + (y > 0) + (y + 1 < h);
  }
  const auto for_each_neighbour = [w, h](std::size_t i, auto&& fn) {
    const std::uint32_t x = i % w, y = static_cast<std::uint32_t>(i / w);
    if (x > 0) fn(i - 1);
    if (x + 1 < w) fn(i + 1);
    if (y > 0) fn(i - w);
    if (y + 1 < h) fn(i + w);
  };
  const auto apply = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t k = 0; k < m; ++k) {
      double acc = degree[k] * in[k];
      for_each_neighbour(free_pixels[k], [&](std::size_t j) {
        if (unknown[j] >= 0) acc -= in[static_cast<std::size_t>(unknown[j])];
      });
      out[k] = acc;
    }
  };

  parallel_for(r.channels, detail::channel_threads(cfg, r.channels), [&](std::size_t c) {
    std::vector<double> value(n, 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i)
      if (cons.count[i]) {
        value[i] = cons.sum[c][i] / cons.count[i];
        lo = std::min(lo, value[i]);
        hi = std::max(hi, value[i]);
      }
    // Solve for the offset from the constraint mid-range so residuals scale with the data range.
    const double shift = 0.5 * (lo + hi);
    std::vector<double> rhs(m, 0.0), x(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
      for_each_neighbour(free_pixels[k], [&](std::size_t j) {
        if (unknown[j] < 0) rhs[k] += value[j] - shift;
      });
    stats[c] = conjugate_gradient(apply, degree, rhs, x, detail::cg_options(cfg, static_cast<std::uint32_t>(c), false));
    auto& plane = planes[c];
    plane.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      plane[i] = unknown[i] >= 0 ? x[static_cast<std::size_t>(unknown[i])] + shift : value[i];
  });
  return detail::finish(r, std::move(planes), std::move(stats));
}

/// Per-pixel weights and target gradients of the gradient-domain problem.
struct GradientTargets {
  std::vector<double> weight;
  std::vector<std::vector<double>> gx, gy;
};

inline GradientTargets gradient_targets(const SparseRepresentation& r, double constraint_weight) {
  const std::size_t n = r.pixel_count();
  GradientTargets t{std::vector<double>(n, 1.0), std::vector<std::vector<double>>(r.channels, std::vector<double>(n, 0.0)),
                    std::vector<std::vector<double>>(r.channels, std::vector<double>(n, 0.0))};
  for (const auto& c : r.contours.contours)
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::size_t q = std::size_t{c.points[i].y} * r.width + c.points[i].x;
      t.weight[q] = constraint_weight;
      for (std::uint32_t ch = 0; ch < r.channels; ++ch) {
        t.gx[ch][q] = c.features[(i * r.channels + ch) * 2];
        t.gy[ch][q] = c.features[(i * r.channels + ch) * 2 + 1];
      }
    }
  return t;
}

/// Screened gradient-domain least squares: per channel minimise
/// sum_p w(p) |D u(p) - g(p)|^2 with D the forward-difference operator used by
/// the encoder (zero on the last column/row), w = lambda on contour pixels
/// and 1 elsewhere, g = 0 off the contours. The mean of u is pinned to the
/// channel's dc anchor.
inline ReconstructionResult reconstruct_gradient(const SparseRepresentation& r, const SolverConfig& cfg = {}) {
  cfg.validate();
  validate(r);
  if (r.kind != FeatureKind::kGradient) throw InvalidArgument("gradient reconstruction needs GRADIENT features");
  const std::uint32_t w = r.width, h = r.height;
  const std::size_t n = r.pixel_count();
  const auto t = gradient_targets(r, cfg.constraint_weight);

  // D'WD: horizontal edge (i, i+1) and vertical edge (i, i+w) both carry w(i).
  std::vector<double> diagonal(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t x = i % w, y = static_cast<std::uint32_t>(i / w);
    if (x + 1 < w) {
      diagonal[i] += t.weight[i];
      diagonal[i + 1] += t.weight[i];
    }
    if (y + 1 < h) {
      diagonal[i] += t.weight[i];
      diagonal[i + w] += t.weight[i];
    }
  }
  // A 1x1 image has no difference rows; any u works and the anchor fixes it.
  for (auto& d : diagonal)
    if (d == 0.0) d = 1.0;
  const auto apply = [&](std::span<const double> in, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t x = i % w, y = static_cast<std::uint32_t>(i / w);
      if (x + 1 < w) {
        const double f = t.weight[i] * (in[i + 1] - in[i]);
        out[i] -= f;
        out[i + 1] += f;
      }
      if (y + 1 < h) {
        const double f = t.weight[i] * (in[i + w] - in[i]);
        out[i] -= f;
        out[i + w] += f;
      }
    }
  };

  std::vector<std::vector<double>> planes(r.channels);
  std::vector<SolveStats> stats(r.channels);
  parallel_for(r.channels, detail::channel_threads(cfg, r.channels), [&](std::size_t c) {
    std::vector<double> rhs(n, 0.0), x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t px = i % w, py = static_cast<std::uint32_t>(i / w);
      if (px + 1 < w) {
        const double f = t.weight[i] * t.gx[c][i];
        rhs[i] -= f;
        rhs[i + 1] += f;
      }
      if (py + 1 < h) {
        const double f = t.weight[i] * t.gy[c][i];
        rhs[i] -= f;
        rhs[i + w] += f;
      }
    }
    stats[c] = conjugate_gradient(apply, diagonal, rhs, x, detail::cg_options(cfg, static_cast<std::uint32_t>(c), true));
    auto& plane = planes[c];
    plane.resize(n);
    for (std::size_t i = 0; i < n; ++i) plane[i] = x[i] + r.dc_anchor[c];
  });
  return detail::finish(r, std::move(planes), std::move(stats));
}

inline ReconstructionResult reconstruct(const SparseRepresentation& r, const SolverConfig& cfg = {}) {
  return r.kind == FeatureKind::kColor ? reconstruct_diffusion(r, cfg) : reconstruct_gradient(r, cfg);
}

}  // namespace scif

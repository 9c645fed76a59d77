#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "scif/error.hpp"
#include "scif/image.hpp"
#include "scif/image_io.hpp"

namespace scif {

/// Edge strength normalized to [0,1] plus gradient direction (radians, y down).
struct EdgeMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> probability;
  std::vector<float> orientation;

  float prob(std::int64_t x, std::int64_t y) const { return probability[static_cast<std::size_t>(y) * width + x]; }
};

struct BinaryEdgeMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> mask;
  double achieved_sparsity = 0.0;

  bool at(std::int64_t x, std::int64_t y) const {
    return x >= 0 && y >= 0 && x < width && y < height && mask[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  return k;
}

// Separable blur with replicate borders.
inline std::vector<double> gaussian_blur(const std::vector<double>& src, std::uint32_t w, std::uint32_t h, double sigma) {
  if (sigma <= 0.0) return src;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  const auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * src[std::size_t{y} * w + clampi(int(x) + i, int(w) - 1)];
      tmp[std::size_t{y} * w + x] = s;
    }
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp[std::size_t(clampi(int(y) + i, int(h) - 1)) * w + x];
      out[std::size_t{y} * w + x] = s;
    }
  return out;
}

// Bilinear lookup; positions outside the pixel-center rectangle read as 0.
inline double sample_or_zero(const EdgeMap& e, double x, double y) {
  if (x < 0.0 || y < 0.0 || x > e.width - 1.0 || y > e.height - 1.0) return 0.0;
  const auto x0 = static_cast<std::int64_t>(std::floor(x));
  const auto y0 = static_cast<std::int64_t>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  const auto x1 = std::min<std::int64_t>(x0 + 1, e.width - 1);
  const auto y1 = std::min<std::int64_t>(y0 + 1, e.height - 1);
  return (1 - fx) * (1 - fy) * e.prob(x0, y0) + fx * (1 - fy) * e.prob(x1, y0) + (1 - fx) * fy * e.prob(x0, y1) +
         fx * fy * e.prob(x1, y1);
}

}  // namespace detail

/// Gaussian-presmoothed Sobel magnitude of luminance, normalized by its
/// maximum. Sobel uses replicate borders.
inline EdgeMap compute_edge_probability(const RasterImage& image, double presmooth_sigma = 1.0) {
  if (!(presmooth_sigma >= 0.0)) throw InvalidArgument("presmooth sigma must be >= 0");
  const auto w = image.width(), h = image.height();
  const auto lum = detail::gaussian_blur(to_luminance(image).plane(0), w, h, presmooth_sigma);

  EdgeMap out{w, h, std::vector<float>(lum.size(), 0.0f), std::vector<float>(lum.size(), 0.0f)};
  std::vector<double> mag(lum.size());
  const auto px = [&](int x, int y) {
    x = std::clamp(x, 0, int(w) - 1);
    y = std::clamp(y, 0, int(h) - 1);
    return lum[std::size_t(y) * w + x];
  };
  double peak = 0.0;
  for (int y = 0; y < int(h); ++y)
    for (int x = 0; x < int(w); ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const std::size_t i = std::size_t(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      out.orientation[i] = static_cast<float>(std::atan2(gy, gx));
      peak = std::max(peak, mag[i]);
    }
  // Below this the map is numerically flat; report no edges.
  if (peak <= 1e-9) {
    std::fill(out.orientation.begin(), out.orientation.end(), 0.0f);
    return out;
  }
  for (std::size_t i = 0; i < mag.size(); ++i) out.probability[i] = static_cast<float>(mag[i] / peak);
  return out;
}

/// Keeps a pixel when it is >= both bilinear neighbours one pixel away along
/// its orientation. Plateaus survive.
inline EdgeMap non_max_suppress(const EdgeMap& edges) {
  EdgeMap out{edges.width, edges.height, std::vector<float>(edges.probability.size(), 0.0f), edges.orientation};
  for (std::uint32_t y = 0; y < edges.height; ++y)
    for (std::uint32_t x = 0; x < edges.width; ++x) {
      const std::size_t i = std::size_t{y} * edges.width + x;
      const float p = edges.probability[i];
      if (p <= 0.0f) continue;
      const double dx = std::cos(edges.orientation[i]), dy = std::sin(edges.orientation[i]);
      const double ahead = detail::sample_or_zero(edges, x + dx, y + dy);
      const double behind = detail::sample_or_zero(edges, x - dx, y - dy);
      if (p >= ahead && p >= behind) out.probability[i] = p;
    }
  return out;
}

/// Keeps the largest set of strongest pixels whose size does not exceed
/// round(target * W * H); zero-probability pixels are never kept. When a
/// tie at the threshold would overshoot, the whole tied group is dropped.
inline BinaryEdgeMask binarize_by_percentile(const EdgeMap& edges, double target_sparsity) {
  if (!(target_sparsity >= 0.0 && target_sparsity <= 1.0)) throw InvalidArgument("target sparsity must be in [0,1]");
  const std::size_t n = edges.probability.size();
  BinaryEdgeMask out{edges.width, edges.height, std::vector<std::uint8_t>(n, 0), 0.0};
  const auto budget = static_cast<std::size_t>(std::llround(target_sparsity * static_cast<double>(n)));
  if (budget == 0 || n == 0) return out;

  std::vector<float> nonzero;
  for (float p : edges.probability)
    if (p > 0.0f) nonzero.push_back(p);
  std::sort(nonzero.begin(), nonzero.end(), std::greater<>());

  float threshold = 0.0f;
  if (nonzero.size() > budget) {
    // Pixels strictly above the value at rank `budget` fit the budget.
    threshold = nonzero[budget];
  }
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (edges.probability[i] > threshold) {
      out.mask[i] = 1;
      ++kept;
    }
  out.achieved_sparsity = static_cast<double>(kept) / static_cast<double>(n);
  return out;
}

/// Single reverse raster pass removing 4-connected staircase corners: a pixel
/// with both a horizontal and a vertical 4-neighbour whose 8-neighbours form
/// one connected group. Such corners would otherwise count as junctions
/// during tracing and shred thin edges into short chains.
inline BinaryEdgeMask thin_mask(const BinaryEdgeMask& in) {
  BinaryEdgeMask m = in;
  const int w = static_cast<int>(m.width), h = static_cast<int>(m.height);
  static constexpr int kRing[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  std::size_t kept = 0;
  // Reverse raster order: of two pixels straddling an edge the one with
  // smaller coordinates survives, which is where the forward difference
  // across that edge is stored.
  for (int y = h - 1; y >= 0; --y)
    for (int x = w - 1; x >= 0; --x) {
      if (!m.at(x, y)) continue;
      const bool horizontal = m.at(x - 1, y) || m.at(x + 1, y);
      const bool vertical = m.at(x, y - 1) || m.at(x, y + 1);
      if (horizontal && vertical) {
        int members[8], n = 0;
        for (int k = 0; k < 8; ++k)
          if (m.at(x + kRing[k][0], y + kRing[k][1])) members[n++] = k;
        int parent[8];
        for (int i = 0; i < n; ++i) parent[i] = i;
        const auto root = [&](int a) {
          while (parent[a] != a) a = parent[a];
          return a;
        };
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const auto& a = kRing[members[i]];
            const auto& b = kRing[members[j]];
            if (std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])) == 1) parent[root(i)] = root(j);
          }
        int groups = 0;
        for (int i = 0; i < n; ++i) groups += root(i) == i ? 1 : 0;
        if (groups == 1) {
          m.mask[std::size_t(y) * w + x] = 0;
          continue;
        }
      }
      ++kept;
    }
  m.achieved_sparsity = m.mask.empty() ? 0.0 : static_cast<double>(kept) / static_cast<double>(m.mask.size());
  return m;
}

/// External detector hook: a PGM/PNG where values > 127 mark edge pixels.
inline BinaryEdgeMask mask_from_image(const RasterImage& image) {
  const auto gray = to_luminance(image);
  BinaryEdgeMask out{gray.width(), gray.height(), std::vector<std::uint8_t>(gray.pixel_count(), 0), 0.0};
  auto d = gray.data();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (std::lround(d[i] * 255.0f) > 127) {
      out.mask[i] = 1;
      ++kept;
    }
  out.achieved_sparsity = out.mask.empty() ? 0.0 : static_cast<double>(kept) / static_cast<double>(out.mask.size());
  return out;
}

inline BinaryEdgeMask read_mask(const std::filesystem::path& path) { return mask_from_image(read_image(path)); }

}  // namespace scif

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "scif/contour.hpp"
#include "scif/edge_detect.hpp"
#include "scif/image.hpp"
#include "scif/representation.hpp"

namespace scif {

struct EncodeConfig {
  double target_sparsity = 0.06;
  std::size_t min_contour_length = 10;
  FeatureKind kind = FeatureKind::kGradient;
  double presmooth_sigma = 1.0;
  double sample_offset = 1.5;

  void validate() const {
    if (!(target_sparsity > 0.0 && target_sparsity <= 0.5)) throw InvalidArgument("target sparsity must be in (0, 0.5]");
    if (!(sample_offset >= 1.0)) throw InvalidArgument("sample offset must be >= 1");
    if (!(presmooth_sigma >= 0.0)) throw InvalidArgument("presmooth sigma must be >= 0");
    if (min_contour_length < 1) throw InvalidArgument("min contour length must be >= 1");
  }
};

/// What the detector stage achieved, alongside the representation.
struct EncodeDiagnostics {
  double nms_sparsity = 0.0;   // nonzero fraction after suppression: the achievable ceiling
  double mask_sparsity = 0.0;  // fraction kept by percentile binarization
  bool ceiling_hit = false;    // the target asked for more than the suppressed map holds
  std::size_t contours_traced = 0;
  std::size_t contours_kept = 0;
};

struct EncodeResult {
  SparseRepresentation representation;
  EncodeDiagnostics diagnostics;
};

/// Bilinear sample of channel c at (x, y), clamped to the pixel-center rectangle.
inline double sample_bilinear(const RasterImage& img, double x, double y, std::uint32_t c) {
  x = std::clamp(x, 0.0, img.width() - 1.0);
  y = std::clamp(y, 0.0, img.height() - 1.0);
  const auto x0 = static_cast<std::uint32_t>(std::floor(x));
  const auto y0 = static_cast<std::uint32_t>(std::floor(y));
  const auto x1 = std::min(x0 + 1, img.width() - 1);
  const auto y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fx) * (1 - fy) * img.at(x0, y0, c) + fx * (1 - fy) * img.at(x1, y0, c) +
         (1 - fx) * fy * img.at(x0, y1, c) + fx * fy * img.at(x1, y1, c);
}

/// COLOR features: I_d = image(p - offset*n), I_b = image(p + offset*n),
/// stored per channel as (I_d, I_b).
inline ContourSet sample_color_features(const RasterImage& image, const ContourSet& set, double offset) {
  if (!(offset >= 1.0)) throw InvalidArgument("sample offset must be >= 1");
  ContourSet out = set;
  const auto channels = image.channels();
  for (auto& c : out.contours) {
    if (c.normals.size() != c.size()) c.normals = contour_normals(c);
    c.features.assign(c.size() * 2 * channels, 0.0f);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.points[i];
      const auto& n = c.normals[i];
      for (std::uint32_t ch = 0; ch < channels; ++ch) {
        c.features[(i * channels + ch) * 2] =
            static_cast<float>(sample_bilinear(image, p.x - offset * n.x, p.y - offset * n.y, ch));
        c.features[(i * channels + ch) * 2 + 1] =
            static_cast<float>(sample_bilinear(image, p.x + offset * n.x, p.y + offset * n.y, ch));
      }
    }
  }
  return out;
}

/// Forward difference along x at (x, y); zero on the last column.
inline double forward_dx(const RasterImage& img, std::uint32_t x, std::uint32_t y, std::uint32_t c) {
  return x + 1 < img.width() ? double(img.at(x + 1, y, c)) - img.at(x, y, c) : 0.0;
}

/// Forward difference along y at (x, y); zero on the last row.
inline double forward_dy(const RasterImage& img, std::uint32_t x, std::uint32_t y, std::uint32_t c) {
  return y + 1 < img.height() ? double(img.at(x, y + 1, c)) - img.at(x, y, c) : 0.0;
}

/// GRADIENT features: (Gx, Gy) per channel by forward differences at p.
inline ContourSet compute_gradient_features(const RasterImage& image, const ContourSet& set) {
  ContourSet out = set;
  const auto channels = image.channels();
  for (auto& c : out.contours) {
    c.features.assign(c.size() * 2 * channels, 0.0f);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.points[i];
      for (std::uint32_t ch = 0; ch < channels; ++ch) {
        c.features[(i * channels + ch) * 2] = static_cast<float>(forward_dx(image, p.x, p.y, ch));
        c.features[(i * channels + ch) * 2 + 1] = static_cast<float>(forward_dy(image, p.x, p.y, ch));
      }
    }
  }
  return out;
}

inline std::vector<float> channel_means(const RasterImage& image) {
  std::vector<float> means(image.channels(), 0.0f);
  auto d = image.data();
  for (std::uint32_t c = 0; c < image.channels(); ++c) {
    double sum = 0.0;
    for (std::size_t i = c; i < d.size(); i += image.channels()) sum += d[i];
    means[c] = static_cast<float>(std::clamp(sum / static_cast<double>(image.pixel_count()), 0.0, 1.0));
  }
  return means;
}

/// Tracing onward from an already binarized mask; used by `encode` and by
/// callers that bring their own edge detector.
inline EncodeResult encode_from_mask(const RasterImage& image, const BinaryEdgeMask& mask, const EncodeConfig& config) {
  if (!(config.sample_offset >= 1.0)) throw InvalidArgument("sample offset must be >= 1");
  if (mask.width != image.width() || mask.height != image.height())
    throw InvalidArgument("edge mask size differs from image size");
  EncodeResult result;
  auto& diag = result.diagnostics;
  diag.mask_sparsity = mask.achieved_sparsity;

  const auto traced = trace_contours(mask);
  diag.contours_traced = traced.contours.size();
  auto contours = estimate_normals(filter_short(traced, config.min_contour_length));
  diag.contours_kept = contours.contours.size();

  auto& r = result.representation;
  r.width = image.width();
  r.height = image.height();
  r.channels = image.channels();
  r.kind = config.kind;
  r.dc_anchor = channel_means(image);
  r.sample_offset = static_cast<float>(config.sample_offset);
  r.contours = config.kind == FeatureKind::kColor ? sample_color_features(image, contours, r.sample_offset)
                                                  : compute_gradient_features(image, contours);
  return result;
}

/// Detector -> NMS -> percentile mask -> staircase thinning -> chains ->
/// length filter -> normals -> features.
inline EncodeResult encode_detailed(const RasterImage& image, const EncodeConfig& config) {
  config.validate();
  const auto suppressed = non_max_suppress(compute_edge_probability(image, config.presmooth_sigma));
  const auto mask = binarize_by_percentile(suppressed, config.target_sparsity);
  auto result = encode_from_mask(image, thin_mask(mask), config);
  result.diagnostics.mask_sparsity = mask.achieved_sparsity;

  const auto nonzero = std::count_if(suppressed.probability.begin(), suppressed.probability.end(),
                                     [](float p) { return p > 0.0f; });
  result.diagnostics.nms_sparsity = static_cast<double>(nonzero) / static_cast<double>(image.pixel_count());
  result.diagnostics.ceiling_hit =
      static_cast<double>(nonzero) < std::llround(config.target_sparsity * static_cast<double>(image.pixel_count()));
  return result;
}

inline SparseRepresentation encode(const RasterImage& image, const EncodeConfig& config = {}) {
  return encode_detailed(image, config).representation;
}

}  // namespace scif

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "scif/contour.hpp"
#include "scif/error.hpp"

namespace scif {

/// COLOR stores (I_d, I_b) per channel sampled either side of the contour;
/// GRADIENT stores forward differences (Gx, Gy) per channel.
enum class FeatureKind : std::uint8_t { kColor = 0, kGradient = 1 };

inline const char* to_string(FeatureKind k) { return k == FeatureKind::kColor ? "color" : "gradient"; }

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "color") return FeatureKind::kColor;
  if (s == "gradient") return FeatureKind::kGradient;
  throw InvalidArgument("unknown feature kind '" + s + "'");
}

struct SparseRepresentation {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 3;
  FeatureKind kind = FeatureKind::kGradient;
  std::vector<float> dc_anchor;
  float sample_offset = 1.5f;
  ContourSet contours;

  std::size_t feature_dim() const noexcept { return 2 * std::size_t{channels}; }
  std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }

  std::uint32_t next_free_id() const {
    std::uint32_t next = 0;
    for (const auto& c : contours.contours) next = std::max(next, c.id + 1);
    return next;
  }

  friend bool operator==(const SparseRepresentation&, const SparseRepresentation&) = default;
};

/// Throws InvalidRepresentation naming the first broken invariant.
inline void validate(const SparseRepresentation& r) {
  const auto fail = [](const std::string& m) { throw InvalidRepresentation(m); };
  if (r.channels != 1 && r.channels != 3) fail("channels must be 1 or 3");
  if (r.width == 0 || r.height == 0) fail("zero image dimension");
  if (r.contours.width != r.width || r.contours.height != r.height) fail("contour set dimensions differ from header");
  if (r.kind != FeatureKind::kColor && r.kind != FeatureKind::kGradient) fail("unknown feature kind");
  if (r.dc_anchor.size() != r.channels) fail("dc anchor length differs from channel count");
  for (float v : r.dc_anchor)
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) fail("dc anchor outside [0,1]");
  if (!std::isfinite(r.sample_offset) || r.sample_offset < 1.0f) fail("sample offset must be >= 1");

  std::unordered_set<std::uint32_t> ids;
  std::vector<std::uint8_t> owned(r.pixel_count(), 0);
  for (const auto& c : r.contours.contours) {
    const std::string tag = "contour " + std::to_string(c.id) + ": ";
    if (!ids.insert(c.id).second) fail(tag + "duplicate id");
    if (c.points.empty()) fail(tag + "no points");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& p = c.points[i];
      if (p.x >= r.width || p.y >= r.height) fail(tag + "point out of bounds");
      if (i > 0 && chebyshev(c.points[i - 1], p) != 1) fail(tag + "consecutive points not 8-connected");
      auto& o = owned[std::size_t{p.y} * r.width + p.x];
      if (o) fail(tag + "pixel (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") used twice");
      o = 1;
    }
    if (c.features.size() != c.size() * r.feature_dim()) fail(tag + "feature length mismatch");
    for (float f : c.features)
      if (!std::isfinite(f)) fail(tag + "non-finite feature");
    if (!c.normals.empty()) {
      if (c.normals.size() != c.size()) fail(tag + "normal count mismatch");
      for (const auto& n : c.normals)
        if (std::abs(std::hypot(n.x, n.y) - 1.0) > 1e-6) fail(tag + "normal not unit length");
    }
  }
}

inline bool is_valid(const SparseRepresentation& r) {
  try {
    validate(r);
    return true;
  } catch (const InvalidRepresentation&) {
    return false;
  }
}

/// Fraction of image pixels that carry features.
inline double sparsity(const SparseRepresentation& r) {
  return r.pixel_count() == 0 ? 0.0 : static_cast<double>(r.contours.total_points()) / static_cast<double>(r.pixel_count());
}

}  // namespace scif

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "scif/error.hpp"

namespace scif {

/// Dense row-major, channel-interleaved image with values in [0,1].
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels, float fill = 0.0f)
      : RasterImage(width, height, channels,
                    std::vector<float>(std::size_t{width} * height * channels, fill)) {}

  RasterImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels, std::vector<float> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (channels_ != 1 && channels_ != 3) throw InvalidArgument("image channels must be 1 or 3");
    if (data_.size() != std::size_t{width_} * height_ * channels_)
      throw InvalidArgument("image data length does not match dimensions");
    for (float v : data_)
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw InvalidArgument("image value outside [0,1]");
  }

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return std::size_t{width_} * height_; }
  bool empty() const noexcept { return data_.empty(); }

  float at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const noexcept {
    return data_[(std::size_t{y} * width_ + x) * channels_ + c];
  }

  std::span<const float> data() const noexcept { return data_; }

  /// One channel as a planar double buffer; the solvers and detectors work on these.
  std::vector<double> plane(std::uint32_t c) const {
    std::vector<double> out(pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + c];
    return out;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::uint32_t channels_ = 1;
  std::vector<float> data_;
};

/// Builds an image from planar channels, clamping every value into [0,1].
inline RasterImage image_from_planes(std::uint32_t width, std::uint32_t height,
                                     const std::vector<std::vector<double>>& planes) {
  const auto channels = static_cast<std::uint32_t>(planes.size());
  std::vector<float> data(std::size_t{width} * height * channels);
  for (std::uint32_t c = 0; c < channels; ++c) {
    const auto& p = planes[c];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double v = std::isfinite(p[i]) ? p[i] : 0.0;
      data[i * channels + c] = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
    }
  }
  return RasterImage(width, height, channels, std::move(data));
}

// Rec. 601 weights.
inline RasterImage to_luminance(const RasterImage& image) {
  if (image.channels() == 1) return image;
  std::vector<float> lum(image.pixel_count());
  auto src = image.data();
  for (std::size_t i = 0; i < lum.size(); ++i) {
    double v = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    lum[i] = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
  }
  return RasterImage(image.width(), image.height(), 1, std::move(lum));
}

}  // namespace scif

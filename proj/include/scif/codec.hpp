#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scif/error.hpp"
#include "scif/image_io.hpp"
#include "scif/representation.hpp"

// SCIF v1, all integers and floats little-endian, no padding.
//
//   header   "SCIF" | version u8 = 1 | width u32 | height u32 | channels u8 |
//            format u8 (kind + 2 * quantized) | sample_offset f32 |
//            dc_anchor f32 x channels | contour_count u32
//   record   length u32 | start x u16 | start y u16 | (length-1) chain codes u8 |
//            features: length * F f32                      (quantized = 0)
//                      F * (min f32, max f32), length * F u8 (quantized = 1)
//
// F = 2 * channels. Chain codes 0..7 = E, NE, N, NW, W, SW, S, SE with y down.

namespace scif {

inline constexpr std::uint8_t kScifVersion = 1;
inline constexpr std::size_t kScifFixedHeaderBytes = 23;

namespace detail {

inline constexpr int kChainDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr int kChainDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

inline std::uint8_t chain_code(const Point& a, const Point& b) {
  const int dx = int(b.x) - int(a.x), dy = int(b.y) - int(a.y);
  for (std::uint8_t k = 0; k < 8; ++k)
    if (kChainDx[k] == dx && kChainDy[k] == dy) return k;
  throw InvalidRepresentation("consecutive contour points are not 8-adjacent");
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  bool has(std::size_t n) const { return in_.size() - pos_ >= n; }
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    std::uint16_t v = in_[pos_] | (std::uint16_t(in_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline std::size_t record_bytes(std::size_t length, std::size_t dim, bool quantized) {
  const std::size_t fixed = 4 + 4 + (length - 1);
  return quantized ? fixed + dim * 8 + length * dim : fixed + length * dim * 4;
}

}  // namespace detail

/// Exact size serialize() will produce, from the contour census alone.
inline std::size_t scif_size(const SparseRepresentation& r, bool quantized) {
  std::size_t n = kScifFixedHeaderBytes + 4 * std::size_t{r.channels};
  for (const auto& c : r.contours.contours) n += detail::record_bytes(c.size(), r.feature_dim(), quantized);
  return n;
}

/// Records go out in ascending id order. Refuses invalid representations.
inline std::vector<std::uint8_t> serialize(const SparseRepresentation& r, bool quantized = false) {
  validate(r);
  const std::size_t dim = r.feature_dim();
  std::vector<const Contour*> order;
  for (const auto& c : r.contours.contours) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Contour* a, const Contour* b) { return a->id < b->id; });

  detail::ByteWriter w;
  w.bytes("SCIF", 4);
  w.u8(kScifVersion);
  w.u32(r.width);
  w.u32(r.height);
  w.u8(static_cast<std::uint8_t>(r.channels));
  w.u8(static_cast<std::uint8_t>(static_cast<std::uint8_t>(r.kind) + (quantized ? 2 : 0)));
  w.f32(r.sample_offset);
  for (float v : r.dc_anchor) w.f32(v);
  w.u32(static_cast<std::uint32_t>(order.size()));

  for (const Contour* c : order) {
    w.u32(static_cast<std::uint32_t>(c->size()));
    w.u16(c->points.front().x);
    w.u16(c->points.front().y);
    for (std::size_t i = 1; i < c->size(); ++i) w.u8(detail::chain_code(c->points[i - 1], c->points[i]));
    if (!quantized) {
      for (float f : c->features) w.f32(f);
      continue;
    }
    std::vector<float> lo(dim, 0.0f), hi(dim, 0.0f);
    for (std::size_t j = 0; j < dim; ++j) {
      lo[j] = hi[j] = c->features[j];
      for (std::size_t i = 1; i < c->size(); ++i) {
        lo[j] = std::min(lo[j], c->features[i * dim + j]);
        hi[j] = std::max(hi[j], c->features[i * dim + j]);
      }
      w.f32(lo[j]);
      w.f32(hi[j]);
    }
    for (std::size_t i = 0; i < c->size(); ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        const double range = double(hi[j]) - lo[j];
        const double v = range > 0.0 ? (double(c->features[i * dim + j]) - lo[j]) / range * 255.0 : 0.0;
        w.u8(static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)));
      }
  }
  return w.take();
}

/// Inverse of serialize. Ids are assigned 0..n-1 in file order, normals are
/// recomputed, and every invariant is re-checked.
inline SparseRepresentation deserialize(std::span<const std::uint8_t> bytes) {
  using Code = CodecError::Code;
  detail::ByteReader in(bytes);
  if (!in.has(4) || std::memcmp(bytes.data(), "SCIF", 4) != 0) throw CodecError(Code::kBadMagic, "bad magic (not a SCIF file)");
  for (int i = 0; i < 4; ++i) in.u8();
  if (!in.has(1)) throw CodecError(Code::kTruncated, "truncated header");
  const auto version = in.u8();
  if (version != kScifVersion) throw CodecError(Code::kUnknownVersion, "unknown SCIF version " + std::to_string(version));
  if (!in.has(kScifFixedHeaderBytes - 5)) throw CodecError(Code::kTruncated, "truncated header");

  SparseRepresentation r;
  r.width = in.u32();
  r.height = in.u32();
  r.channels = in.u8();
  const auto format = in.u8();
  r.sample_offset = in.f32();
  if (r.channels != 1 && r.channels != 3) throw CodecError(Code::kBadHeader, "channel count must be 1 or 3");
  if (format > 3) throw CodecError(Code::kBadHeader, "unknown format byte " + std::to_string(format));
  if (r.width == 0 || r.height == 0 || r.width > 65536 || r.height > 65536)
    throw CodecError(Code::kBadHeader, "image dimensions out of range");
  r.kind = static_cast<FeatureKind>(format & 1);
  const bool quantized = (format & 2) != 0;
  if (!in.has(4 * std::size_t{r.channels} + 4)) throw CodecError(Code::kTruncated, "truncated header");
  r.dc_anchor.resize(r.channels);
  for (auto& v : r.dc_anchor) v = in.f32();
  const std::uint32_t count = in.u32();
  r.contours.width = r.width;
  r.contours.height = r.height;

  const std::size_t dim = r.feature_dim();
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto truncated = [k] {
      return CodecError(Code::kTruncated, "truncated payload in contour " + std::to_string(k));
    };
    if (!in.has(8)) throw truncated();
    const std::uint32_t length = in.u32();
    if (length == 0) throw CodecError(Code::kInvalid, "contour " + std::to_string(k) + " has zero length");
    if (in.remaining() - 4 < detail::record_bytes(length, dim, quantized) - 8) {
      // Length field may itself be garbage; either way the bytes are not there.
      throw truncated();
    }
    Contour c;
    c.id = k;
    c.points.resize(length);
    int x = in.u16(), y = in.u16();
    const auto check = [&] {
      if (x < 0 || y < 0 || x >= int(r.width) || y >= int(r.height))
        throw CodecError(Code::kOutOfBounds, "contour " + std::to_string(k) + " leaves the image");
    };
    check();
    c.points[0] = Point{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)};
    for (std::uint32_t i = 1; i < length; ++i) {
      const auto code = in.u8();
      if (code > 7) throw CodecError(Code::kInvalid, "contour " + std::to_string(k) + " has chain code > 7");
      x += detail::kChainDx[code];
      y += detail::kChainDy[code];
      check();
      c.points[i] = Point{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)};
    }
    c.features.resize(std::size_t{length} * dim);
    if (!quantized) {
      for (auto& f : c.features) f = in.f32();
    } else {
      std::vector<float> lo(dim), hi(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        lo[j] = in.f32();
        hi[j] = in.f32();
      }
      for (std::size_t i = 0; i < length; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          c.features[i * dim + j] = static_cast<float>(lo[j] + (in.u8() / 255.0) * (double(hi[j]) - lo[j]));
    }
    r.contours.contours.push_back(std::move(c));
  }
  if (in.remaining() != 0) throw CodecError(Code::kInvalid, "trailing bytes after last contour");

  try {
    for (auto& c : r.contours.contours)
      if (c.size() >= 2) c.normals = contour_normals(c);
    validate(r);
  } catch (const Error& e) {
    throw CodecError(Code::kInvalid, std::string("invalid representation: ") + e.what());
  }
  return r;
}

struct CompressionReport {
  std::size_t scif_bytes = 0;
  std::size_t raw_bytes = 0;
  double ratio = 0.0;
};

inline CompressionReport compression_report(const SparseRepresentation& r, bool quantized = false) {
  CompressionReport rep;
  rep.scif_bytes = serialize(r, quantized).size();
  rep.raw_bytes = r.pixel_count() * r.channels;
  rep.ratio = static_cast<double>(rep.scif_bytes) / static_cast<double>(rep.raw_bytes);
  return rep;
}

inline void write_scif(const SparseRepresentation& r, const std::filesystem::path& path, bool quantized = false) {
  write_file_bytes(path, serialize(r, quantized));
}

inline SparseRepresentation read_scif(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

}  // namespace scif

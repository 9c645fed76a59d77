#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "scif/error.hpp"
#include "scif/image.hpp"

namespace scif {

enum class RasterFormat { kPnm, kPng };

namespace detail {

inline bool is_png_signature(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(kSig, kSig + 8, bytes.begin());
}

// Reads one whitespace-delimited header token, skipping '#' comments.
inline bool next_pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') token.push_back(static_cast<char>(bytes[pos++]));
  return !token.empty();
}

inline std::uint32_t parse_header_number(const std::string& token) {
  if (token.empty() || token.size() > 9 || !std::all_of(token.begin(), token.end(), ::isdigit))
    throw ImageError(ImageError::Code::kMalformedHeader, "malformed PNM header field '" + token + "'");
  return static_cast<std::uint32_t>(std::stoul(token));
}

inline RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P')
    throw ImageError(ImageError::Code::kUnsupportedFormat, "not a PGM/PPM/PNG file");
  std::uint32_t channels = 0;
  if (bytes[1] == '5') channels = 1;
  else if (bytes[1] == '6') channels = 3;
  else throw ImageError(ImageError::Code::kUnsupportedFormat,
                        std::string("unsupported PNM variant P") + static_cast<char>(bytes[1]));

  std::size_t pos = 2;
  std::string tok;
  std::uint32_t fields[3];
  for (auto& f : fields) {
    if (!next_pnm_token(bytes, pos, tok)) throw ImageError(ImageError::Code::kMalformedHeader, "truncated PNM header");
    f = parse_header_number(tok);
  }
  const auto [width, height, maxval] = fields;
  if (width == 0 || height == 0) throw ImageError(ImageError::Code::kMalformedHeader, "PNM with zero dimension");
  if (maxval != 255) throw ImageError(ImageError::Code::kUnsupportedDepth, "PNM maxval must be 255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw ImageError(ImageError::Code::kMalformedHeader, "missing separator after PNM header");
  ++pos;

  const std::size_t n = std::size_t{width} * height * channels;
  if (bytes.size() - pos < n) throw ImageError(ImageError::Code::kUnreadable, "PNM pixel data truncated");
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return RasterImage(width, height, channels, std::move(data));
}

inline RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw ImageError(ImageError::Code::kMalformedHeader, std::string("bad PNG: ") + img.message);
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw ImageError(ImageError::Code::kUnsupportedDepth, "only 8-bit PNG is supported");
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::uint32_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.data(), 0, nullptr))
    throw ImageError(ImageError::Code::kUnreadable, std::string("PNG decode failed: ") + img.message);
  std::vector<float> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(), [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return RasterImage(img.width, img.height, channels, std::move(data));
}

inline std::vector<std::uint8_t> quantize_bytes(const RasterImage& image) {
  auto src = image.data();
  std::vector<std::uint8_t> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<std::uint8_t>(std::lround(src[i] * 255.0f));
  return out;
}

}  // namespace detail

/// Decodes a PGM (P5), PPM (P6) or 8-bit PNG held in memory.
inline RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ImageError(ImageError::Code::kUnreadable, "empty image data");
  if (detail::is_png_signature(bytes)) return detail::decode_png(bytes);
  return detail::decode_pnm(bytes);
}

inline std::vector<std::uint8_t> encode_image(const RasterImage& image, RasterFormat format) {
  const auto pixels = detail::quantize_bytes(image);
  if (format == RasterFormat::kPng) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = image.width();
    img.height = image.height();
    img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr))
      throw ImageError(ImageError::Code::kUnwritable, std::string("PNG encode failed: ") + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr))
      throw ImageError(ImageError::Code::kUnwritable, std::string("PNG encode failed: ") + img.message);
    out.resize(size);
    return out;
  }
  const std::string header = std::string(image.channels() == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(ImageError::Code::kUnreadable, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ImageError(ImageError::Code::kUnreadable, "read failed for " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError(ImageError::Code::kUnwritable, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError(ImageError::Code::kUnwritable, "write failed for " + path.string());
}

inline RasterImage read_image(const std::filesystem::path& path) { return decode_image(read_file_bytes(path)); }

/// Writes PNG when the extension is `.png`, otherwise P5/P6 by channel count.
inline void write_image(const RasterImage& image, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  write_file_bytes(path, encode_image(image, ext == ".png" ? RasterFormat::kPng : RasterFormat::kPnm));
}

}  // namespace scif

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scif {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raster file problems. `code()` tells the failure classes apart.
class ImageError : public Error {
 public:
  enum class Code { kUnreadable, kMalformedHeader, kUnsupportedFormat, kUnsupportedDepth, kUnwritable };

  ImageError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised for contours that cannot carry a tangent (fewer than two points).
class DegenerateContour : public Error {
 public:
  DegenerateContour(std::size_t contour_id, const std::string& what)
      : Error(what), contour_id_(contour_id) {}
  std::size_t contour_id() const noexcept { return contour_id_; }

 private:
  std::size_t contour_id_;
};

/// A representation that breaks a structural invariant.
class InvalidRepresentation : public Error {
 public:
  using Error::Error;
};

class EditError : public Error {
 public:
  enum class Code { kUnknownId, kKindMismatch, kBadOp };

  EditError(Code code, std::size_t op_index, const std::string& what)
      : Error("op " + std::to_string(op_index) + ": " + what), code_(code), op_index_(op_index) {}
  Code code() const noexcept { return code_; }
  std::size_t op_index() const noexcept { return op_index_; }

 private:
  Code code_;
  std::size_t op_index_;
};

/// SCIF decoding failures, one code per malformation class.
class CodecError : public Error {
 public:
  enum class Code { kBadMagic, kUnknownVersion, kBadHeader, kTruncated, kOutOfBounds, kInvalid };

  CodecError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace scif

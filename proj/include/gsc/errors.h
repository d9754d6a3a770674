#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

// Malformed or unsupported on-disk data.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bitstream-level failure with the offending byte position.
struct DecodeError : FormatError {
  size_t byteOffset;
  DecodeError(const std::string& what, size_t offset)
      : FormatError(what + " (byte " + std::to_string(offset) + ")"), byteOffset(offset) {}
};

}  // namespace gsc

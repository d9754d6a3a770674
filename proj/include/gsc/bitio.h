#pragma once

#include <cstdint>
#include <vector>

#include "gsc/errors.h"

namespace gsc {

// MSB-first bit packing.
class BitWriter {
 public:
  void putBit(int bit) {
    if (bitPos_ == 0) {
      bytes_.push_back(0);
    }
    if (bit) {
      bytes_.back() |= static_cast<uint8_t>(0x80u >> bitPos_);
    }
    bitPos_ = (bitPos_ + 1) & 7;
  }

  void putBits(uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) {
      putBit(static_cast<int>((value >> i) & 1u));
    }
  }

  // Order-0 exponential-Golomb: value 0 -> "1", 1 -> "010", 2 -> "011", ...
  void putExpGolomb(uint64_t value) {
    const uint64_t v = value + 1;
    int bits = 0;
    for (uint64_t t = v; t > 1; t >>= 1) ++bits;
    for (int i = 0; i < bits; ++i) putBit(0);
    putBits(v, bits + 1);
  }

  // Signed mapping with zero preserved: 0 -> 0, v > 0 -> 2v-1, v < 0 -> -2v.
  void putSignedExpGolomb(int64_t value) {
    const uint64_t mapped = value > 0 ? static_cast<uint64_t>(value) * 2 - 1
                                      : static_cast<uint64_t>(-value) * 2;
    putExpGolomb(mapped);
  }

  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
  int bitPos_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  int getBit() {
    const size_t byte = pos_ >> 3;
    if (byte >= size_) {
      throw DecodeError("bitstream truncated", size_);
    }
    const int bit = (data_[byte] >> (7 - (pos_ & 7))) & 1;
    ++pos_;
    return bit;
  }

  uint64_t getBits(int count) {
    uint64_t value = 0;
    for (int i = 0; i < count; ++i) {
      value = (value << 1) | static_cast<uint64_t>(getBit());
    }
    return value;
  }

  uint64_t getExpGolomb() {
    int zeros = 0;
    while (getBit() == 0) {
      if (++zeros > 63) {
        throw DecodeError("malformed exp-Golomb code", byteOffset());
      }
    }
    uint64_t v = 1;
    for (int i = 0; i < zeros; ++i) {
      v = (v << 1) | static_cast<uint64_t>(getBit());
    }
    return v - 1;
  }

  int64_t getSignedExpGolomb() {
    const uint64_t mapped = getExpGolomb();
    if (mapped == 0) return 0;
    if (mapped & 1) return static_cast<int64_t>((mapped + 1) / 2);
    return -static_cast<int64_t>(mapped / 2);
  }

  size_t byteOffset() const { return pos_ >> 3; }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace gsc

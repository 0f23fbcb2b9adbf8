#pragma once

#include <bit>
#include <cstdint>
#include <cstring>

#include "cafx/bytes.hpp"
#include "cafx/error.hpp"

// Big-endian primitives shared by the message codec, the interface
// encoding and the node-to-node frame format.

namespace cafx::detail {

inline void put_u8(byte_buffer& buf, uint8_t x) {
  buf.push_back(x);
}

inline void put_u16(byte_buffer& buf, uint16_t x) {
  buf.push_back(static_cast<uint8_t>(x >> 8));
  buf.push_back(static_cast<uint8_t>(x));
}

inline void put_u32(byte_buffer& buf, uint32_t x) {
  for (int shift = 24; shift >= 0; shift -= 8)
    buf.push_back(static_cast<uint8_t>(x >> shift));
}

inline void put_u64(byte_buffer& buf, uint64_t x) {
  for (int shift = 56; shift >= 0; shift -= 8)
    buf.push_back(static_cast<uint8_t>(x >> shift));
}

inline void put_bytes(byte_buffer& buf, byte_span bytes) {
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

/// Cursor over a byte span; throws codec_error instead of reading past
/// the end.
class reader {
public:
  explicit reader(byte_span bytes) : pos_(bytes.data()), end_(bytes.data() + bytes.size()) {
    // nop
  }

  size_t remaining() const noexcept {
    return static_cast<size_t>(end_ - pos_);
  }

  bool done() const noexcept {
    return pos_ == end_;
  }

  uint8_t u8() {
    need(1);
    return *pos_++;
  }

  uint16_t u16() {
    need(2);
    uint16_t x = static_cast<uint16_t>(pos_[0]) << 8 | pos_[1];
    pos_ += 2;
    return x;
  }

  uint32_t u32() {
    need(4);
    uint32_t x = 0;
    for (int i = 0; i < 4; ++i)
      x = x << 8 | pos_[i];
    pos_ += 4;
    return x;
  }

  uint64_t u64() {
    need(8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x = x << 8 | pos_[i];
    pos_ += 8;
    return x;
  }

  byte_span bytes(size_t n) {
    need(n);
    byte_span result{pos_, n};
    pos_ += n;
    return result;
  }

  void expect_done() const {
    if (!done())
      throw failure{errc::codec_error, "trailing bytes after decoded value"};
  }

private:
  void need(size_t n) const {
    if (remaining() < n)
      throw failure{errc::codec_error, "truncated input"};
  }

  const uint8_t* pos_;
  const uint8_t* end_;
};

inline uint32_t float_bits(float x) {
  return std::bit_cast<uint32_t>(x);
}

inline uint64_t double_bits(double x) {
  return std::bit_cast<uint64_t>(x);
}

} // namespace cafx::detail

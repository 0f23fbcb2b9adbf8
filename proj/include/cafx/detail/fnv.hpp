#pragma once

#include <cstddef>
#include <cstdint>

namespace cafx::detail {

inline constexpr uint64_t fnv1a_seed = 0xcbf29ce484222325ull;
inline constexpr uint64_t fnv1a_prime = 0x100000001b3ull;

constexpr uint64_t fnv1a_step(uint64_t h, uint8_t byte) noexcept {
  return (h ^ byte) * fnv1a_prime;
}

constexpr uint64_t fnv1a(const uint8_t* data, size_t size,
                         uint64_t h = fnv1a_seed) noexcept {
  for (size_t i = 0; i < size; ++i)
    h = fnv1a_step(h, data[i]);
  return h;
}

/// Hashes a 32-bit value as four big-endian bytes.
constexpr uint64_t fnv1a_u32(uint64_t h, uint32_t x) noexcept {
  h = fnv1a_step(h, static_cast<uint8_t>(x >> 24));
  h = fnv1a_step(h, static_cast<uint8_t>(x >> 16));
  h = fnv1a_step(h, static_cast<uint8_t>(x >> 8));
  return fnv1a_step(h, static_cast<uint8_t>(x));
}

} // namespace cafx::detail

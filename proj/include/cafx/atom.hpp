#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "cafx/error.hpp"

namespace cafx {

/// A 64-bit constant naming an operation inside a message. Up to ten
/// characters from a 63-symbol alphabet are packed into 6-bit groups;
/// the top four bits stay zero. The mapping is reversible and
/// collision-free over the valid domain.
enum class atom_value : uint64_t {};

inline constexpr size_t max_atom_length = 10;

namespace detail {

// Alphabet codes: '_' = 1, '0'-'9' = 2..11, 'A'-'Z' = 12..37,
// 'a'-'z' = 38..63. Code 0 is reserved for "no character".
constexpr uint64_t atom_code(char c) noexcept {
  if (c == '_')
    return 1;
  if (c >= '0' && c <= '9')
    return 2 + static_cast<uint64_t>(c - '0');
  if (c >= 'A' && c <= 'Z')
    return 12 + static_cast<uint64_t>(c - 'A');
  if (c >= 'a' && c <= 'z')
    return 38 + static_cast<uint64_t>(c - 'a');
  return 0;
}

constexpr char atom_char(uint64_t code) noexcept {
  if (code == 1)
    return '_';
  if (code <= 11)
    return static_cast<char>('0' + (code - 2));
  if (code <= 37)
    return static_cast<char>('A' + (code - 12));
  return static_cast<char>('a' + (code - 38));
}

} // namespace detail

constexpr bool is_valid_atom_text(std::string_view text) noexcept {
  if (text.size() > max_atom_length)
    return false;
  for (auto c : text)
    if (detail::atom_code(c) == 0)
      return false;
  return true;
}

/// Encodes `text` into an atom_value; rejects invalid input instead of
/// truncating. Usable in constant expressions.
constexpr atom_value atom_encode(std::string_view text) {
  if (text.size() > max_atom_length)
    throw failure{errc::invalid_atom, "atom text exceeds ten characters"};
  uint64_t v = 0;
  for (auto c : text) {
    auto code = detail::atom_code(c);
    if (code == 0)
      throw failure{errc::invalid_atom,
                    "character outside the atom alphabet: "
                      + std::string{text}};
    v = (v << 6) | code;
  }
  return static_cast<atom_value>(v);
}

/// Short spelling for defining atom constants: `atom("plus")`.
constexpr atom_value atom(std::string_view text) {
  return atom_encode(text);
}

/// Checks that `v` has zero top bits and only valid 6-bit groups.
constexpr bool is_valid_atom_value(atom_value v) noexcept {
  auto bits = static_cast<uint64_t>(v);
  if (bits >> (6 * max_atom_length) != 0)
    return false;
  while (bits != 0) {
    if ((bits & 0x3F) == 0)
      return false;
    bits >>= 6;
  }
  return true;
}

/// Recovers the text of an atom_value. Throws on malformed values.
std::string atom_decode(atom_value v);

/// Renders an atom for logs and diagnostics (never throws; malformed
/// values print as hex).
std::string to_string(atom_value v);

/// Lifts an atom value to a distinct type, so a single constant can be
/// named in messaging interfaces and matched exactly.
template <atom_value V>
struct atom_constant {
  constexpr atom_constant() = default;

  static constexpr atom_value raw = V;

  /// An instance of this constant, usable wherever a value is expected.
  static const atom_constant value;

  constexpr operator atom_value() const noexcept {
    return V;
  }
};

template <atom_value V>
const atom_constant<V> atom_constant<V>::value{};

} // namespace cafx

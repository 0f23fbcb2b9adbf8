#include <doctest.h>

#include <random>
#include <set>
#include <string>

#include "cafx/atom.hpp"

using namespace cafx;

namespace {

constexpr std::string_view alphabet =
  "_0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

std::string random_atom_text(std::mt19937_64& rng, size_t min_len = 0) {
  std::uniform_int_distribution<size_t> len_dist{min_len, max_atom_length};
  std::uniform_int_distribution<size_t> char_dist{0, alphabet.size() - 1};
  std::string text;
  auto len = len_dist(rng);
  for (size_t i = 0; i < len; ++i)
    text += alphabet[char_dist(rng)];
  return text;
}

} // namespace

TEST_SUITE("atom") {

TEST_CASE("encoding fixed examples") {
  CHECK(atom_encode("") == atom_value{0});
  // 'A' is the 12th alphabet symbol: '_', '0'-'9', then 'A'.
  CHECK(static_cast<uint64_t>(atom_encode("A")) == 12);
  // "AB" folds as 12 * 64 + 13.
  CHECK(static_cast<uint64_t>(atom_encode("AB")) == 781);
  static_assert(atom("") == atom_value{0});
  static_assert(static_cast<uint64_t>(atom("AB")) == 781);
}

TEST_CASE("decoding fixed examples") {
  CHECK(atom_decode(atom_value{0}) == "");
  CHECK(atom_decode(static_cast<atom_value>(12)) == "A");
  CHECK(atom_decode(static_cast<atom_value>(781)) == "AB");
}

TEST_CASE("text validity") {
  CHECK(is_valid_atom_text("Hello"));
  CHECK(is_valid_atom_text(""));
  CHECK(is_valid_atom_text("__________"));
  CHECK_FALSE(is_valid_atom_text("elevencharz"));
  CHECK_FALSE(is_valid_atom_text("a b"));
  CHECK_FALSE(is_valid_atom_text("nope!"));
}

TEST_CASE("encode rejects invalid input") {
  CHECK_THROWS_AS(atom_encode("a b"), failure);
  CHECK_THROWS_AS(atom_encode("elevencharz"), failure);
  try {
    atom_encode("x y");
  } catch (const failure& err) {
    CHECK(err.code() == errc::invalid_atom);
  }
}

TEST_CASE("decode rejects malformed values") {
  // Nonzero top bits.
  CHECK_THROWS_AS(atom_decode(static_cast<atom_value>(uint64_t{1} << 60)),
                  failure);
  // An all-zero 6-bit group below a nonzero one.
  CHECK_THROWS_AS(atom_decode(static_cast<atom_value>(64)), failure);
  CHECK_FALSE(is_valid_atom_value(static_cast<atom_value>(64)));
  CHECK(is_valid_atom_value(static_cast<atom_value>(781)));
}

TEST_CASE("exhaustive one-character round trip") {
  std::set<uint64_t> seen;
  for (auto c : alphabet) {
    std::string text{c};
    auto v = atom_encode(text);
    CHECK(atom_decode(v) == text);
    CHECK(seen.insert(static_cast<uint64_t>(v)).second);
  }
  CHECK(seen.size() == 63);
}

TEST_CASE("random round trip") {
  std::mt19937_64 rng{0xA70Au};
  for (int i = 0; i < 100'000; ++i) {
    auto text = random_atom_text(rng);
    auto v = atom_encode(text);
    REQUIRE(is_valid_atom_value(v));
    REQUIRE(atom_decode(v) == text);
  }
}

TEST_CASE("random injectivity") {
  std::mt19937_64 rng{0x1A7EDu};
  for (int i = 0; i < 100'000; ++i) {
    auto t1 = random_atom_text(rng);
    auto t2 = random_atom_text(rng);
    if (t1 == t2)
      continue;
    REQUIRE(atom_encode(t1) != atom_encode(t2));
  }
}

TEST_CASE("atom constants") {
  using hello_atom = atom_constant<atom("Hello")>;
  atom_value v = hello_atom::value;
  CHECK(v == atom("Hello"));
  CHECK(atom_decode(hello_atom::raw) == "Hello");
}

} // TEST_SUITE

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "cafx/behavior.hpp"

using namespace cafx;

namespace {

using plus_atom = atom_constant<atom("plus")>;
using minus_atom = atom_constant<atom("minus")>;
using result_atom = atom_constant<atom("result")>;

behavior math_behavior() {
  return {
    [](plus_atom, int32_t a, int32_t b) {
      return std::make_tuple(result_atom::value, a + b);
    },
    [](minus_atom, int32_t a, int32_t b) {
      return std::make_tuple(result_atom::value, a - b);
    },
  };
}

/// The five-case behavior: an exact value, an odd-number guard, a plain
/// integer case, a string-to-float projection and a plain string case.
behavior five_case_behavior(std::vector<int>& fired) {
  auto odd_val = [](int32_t i) -> std::optional<int32_t> {
    if (i % 2 != 0)
      return i;
    return std::nullopt;
  };
  auto str_float = [](const std::string& str) -> std::optional<float> {
    char* last = nullptr;
    auto res = strtof(str.c_str(), &last);
    if (last == str.c_str() + str.size() && !str.empty())
      return res;
    return std::nullopt;
  };
  return {
    on(42) >> [&fired](int32_t i) {
      CHECK(i == 42);
      fired.push_back(0);
    },
    on(odd_val) >> [&fired](int32_t i) {
      CHECK(i % 2 != 0);
      fired.push_back(1);
    },
    [&fired](int32_t i) {
      CHECK(i % 2 == 0);
      CHECK(i != 42);
      fired.push_back(2);
    },
    on(str_float) >> [&fired](float f) {
      CHECK(f == doctest::Approx(3.5f));
      fired.push_back(3);
    },
    [&fired](const std::string& str) {
      CHECK(str == "abc");
      fired.push_back(4);
    },
  };
}

} // namespace

TEST_SUITE("behavior") {

TEST_CASE("to_guard lifts values into guards") {
  auto g = to_guard(42);
  CHECK(g.kind() == matcher::matcher_kind::value_guard);
  auto hit = g.apply(std::any{42});
  REQUIRE(hit.has_value());
  CHECK(std::any_cast<int>(*hit) == 42);
  CHECK_FALSE(g.apply(std::any{41}).has_value());

  auto ga = to_guard(atom("plus"));
  CHECK_FALSE(ga.apply(std::any{atom("minus")}).has_value());
  CHECK(ga.apply(std::any{atom("plus")}).has_value());
}

TEST_CASE("five-case routing") {
  std::vector<int> fired;
  auto bhvr = five_case_behavior(fired);

  auto m42 = make_message(42);
  CHECK(match(bhvr, m42).matched);
  auto m7 = make_message(7);
  CHECK(match(bhvr, m7).matched);
  auto m8 = make_message(8);
  CHECK(match(bhvr, m8).matched);
  auto mf = make_message("3.5");
  CHECK(match(bhvr, mf).matched);
  auto ms = make_message("abc");
  CHECK(match(bhvr, ms).matched);

  CHECK(fired == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("first match wins") {
  int first = 0, second = 0;
  behavior bhvr{
    [&first](int32_t) { ++first; },
    [&second](int32_t) { ++second; },
  };
  auto msg = make_message(1);
  CHECK(match(bhvr, msg).matched);
  CHECK(first == 1);
  CHECK(second == 0);
}

TEST_CASE("no match is a normal outcome") {
  behavior bhvr{[](int32_t) {}};
  auto msg = make_message("text");
  auto outcome = match(bhvr, msg);
  CHECK_FALSE(outcome.matched);
  CHECK_FALSE(outcome.response.has_value());
}

TEST_CASE("catch-all matches anything and answers nothing") {
  int hits = 0;
  behavior bhvr{
    [](int32_t) {},
    others >> [&hits] { ++hits; },
  };
  auto m1 = make_message("anything");
  auto m2 = make_message(1.0, 2.0, 3.0);
  auto empty = make_message();
  CHECK(match(bhvr, m1).matched);
  CHECK(match(bhvr, m2).matched);
  CHECK(match(bhvr, empty).matched);
  CHECK(hits == 3);
  CHECK_FALSE(match(bhvr, m1).response.has_value());
}

TEST_CASE("return values become response messages") {
  auto bhvr = math_behavior();
  auto msg = make_message(atom("plus"), 10, 20);
  auto outcome = match(bhvr, msg);
  REQUIRE(outcome.matched);
  REQUIRE(outcome.response.has_value());
  CHECK(outcome.response->get<atom_value>(0) == atom("result"));
  CHECK(outcome.response->get<int32_t>(1) == 30);

  auto minus_msg = make_message(atom("minus"), 10, 20);
  auto minus_outcome = match(bhvr, minus_msg);
  REQUIRE(minus_outcome.response.has_value());
  CHECK(minus_outcome.response->get<int32_t>(1) == -10);
}

TEST_CASE("response signature equals the derived output signature") {
  auto bhvr = math_behavior();
  auto iface = derive_interface(bhvr);
  REQUIRE(iface.has_value());
  auto msg = make_message(atom("plus"), 1, 2);
  auto outcome = match(bhvr, msg);
  REQUIRE(outcome.response.has_value());
  auto matched_rule = iface->match_inputs(msg);
  REQUIRE(matched_rule != nullptr);
  REQUIRE(matched_rule->outputs.size() == outcome.response->size());
  for (size_t i = 0; i < matched_rule->outputs.size(); ++i)
    CHECK(matched_rule->outputs[i].admits(*outcome.response, i));
}

TEST_CASE("interface derivation") {
  SUBCASE("math behavior") {
    auto iface = derive_interface(math_behavior());
    REQUIRE(iface.has_value());
    messaging_interface expected{
      {{type_spec::atom_const(atom("plus")), type_spec::of(builtin::i32),
        type_spec::of(builtin::i32)},
       {type_spec::atom_const(atom("result")), type_spec::of(builtin::i32)},
       std::nullopt},
      {{type_spec::atom_const(atom("minus")), type_spec::of(builtin::i32),
        type_spec::of(builtin::i32)},
       {type_spec::atom_const(atom("result")), type_spec::of(builtin::i32)},
       std::nullopt},
    };
    CHECK(*iface == expected);
  }
  SUBCASE("catch-all makes the behavior dynamic") {
    behavior bhvr{
      [](int32_t) {},
      others >> [] {},
    };
    CHECK_FALSE(derive_interface(bhvr).has_value());
  }
  SUBCASE("empty behavior derives an empty rule set") {
    auto iface = derive_interface(behavior{});
    REQUIRE(iface.has_value());
    CHECK(iface->empty());
  }
  SUBCASE("conflicting outputs are rejected") {
    behavior bhvr{
      [](int32_t x) { return x; },
      on(42) >> [](int32_t) {},
    };
    CHECK_THROWS_AS(derive_interface(bhvr), failure);
  }
}

TEST_CASE("mutable handler arguments privatize shared messages") {
  behavior bhvr{
    [](int32_t& x) { x = 99; },
  };
  auto m1 = make_message(1);
  auto m2 = m1;
  auto before = copy_stats::now();
  CHECK(match(bhvr, m1).matched);
  CHECK(m1.get<int32_t>(0) == 99);
  CHECK(m2.get<int32_t>(0) == 1);
  CHECK(copy_stats::now().deep_copies == before.deep_copies + 1);

  const auto& cases = bhvr.cases();
  REQUIRE(cases.size() == 1);
  CHECK(cases[0].arg_intents()
        == std::vector<arg_intent>{arg_intent::mutable_access});
}

TEST_CASE("read-only handlers never copy") {
  behavior bhvr{
    [](int32_t) {},
  };
  auto m1 = make_message(1);
  auto m2 = m1;
  auto before = copy_stats::now();
  CHECK(match(bhvr, m1).matched);
  CHECK(copy_stats::now().deep_copies == before.deep_copies);
}

TEST_CASE("projection failure falls through short-circuited") {
  int projections_run = 0;
  auto failing = [&projections_run](int32_t) -> std::optional<int32_t> {
    ++projections_run;
    return std::nullopt;
  };
  auto never = [](int32_t) -> std::optional<int32_t> {
    FAIL("later matchers must not run after an earlier failure");
    return std::nullopt;
  };
  int fallthrough = 0;
  behavior bhvr{
    on(failing, never) >> [](int32_t, int32_t) {},
    [&fallthrough](int32_t, int32_t) { ++fallthrough; },
  };
  auto msg = make_message(1, 2);
  CHECK(match(bhvr, msg).matched);
  CHECK(projections_run == 1);
  CHECK(fallthrough == 1);
}

TEST_CASE("disjoint cases are order-insensitive") {
  // Cases keyed by distinct atom heads have pairwise disjoint match sets;
  // any permutation routes identically.
  std::vector<std::string> heads{"a", "b", "c", "d"};
  std::vector<int> order{0, 1, 2, 3};
  do {
    std::vector<int> fired(4, -1);
    std::vector<match_case> cases;
    for (auto idx : order) {
      auto head = atom_encode(heads[idx]);
      cases.push_back(on(head) >> [idx, &fired](atom_value) {
        fired[idx] = idx;
      });
    }
    behavior bhvr{std::vector<match_case>(cases)};
    for (auto& h : heads) {
      auto msg = make_message(atom_encode(h));
      CHECK(match(bhvr, msg).matched);
    }
    CHECK(fired == std::vector<int>{0, 1, 2, 3});
  } while (std::next_permutation(order.begin(), order.end()));
}

} // TEST_SUITE

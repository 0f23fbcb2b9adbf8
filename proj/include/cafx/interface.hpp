#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cafx/atom.hpp"
#include "cafx/bytes.hpp"
#include "cafx/message.hpp"
#include "cafx/type_registry.hpp"

namespace cafx {

/// One entry of a rule signature: either a plain type or one specific
/// atom constant. Atom constants act as distinct entries so that two
/// operations with the same payload types stay distinguishable.
struct type_spec {
  type_id type = invalid_type_id;
  bool is_constant = false;
  atom_value constant{};

  auto operator<=>(const type_spec&) const = default;

  static type_spec of(type_id t) noexcept {
    return {t, false, {}};
  }

  static type_spec atom_const(atom_value v) noexcept {
    return {builtin::atom, true, v};
  }

  /// True if element `index` of `msg` satisfies this entry.
  bool admits(const message& msg, size_t index) const {
    if (msg.type_at(index) != type)
      return false;
    return !is_constant || msg.get<atom_value>(index) == constant;
  }
};

std::string to_string(const type_spec& spec);

/// Maps one input signature to an output signature; an empty output list
/// means the operation produces no response. `alt_outputs` names the
/// failure alternative of an either/or result.
struct rule {
  std::vector<type_spec> inputs;
  std::vector<type_spec> outputs;
  std::optional<std::vector<type_spec>> alt_outputs;

  auto operator<=>(const rule&) const = default;
};

std::string to_string(const rule& r);

/// A set of rules with unique input signatures. Rule order never matters;
/// construction canonicalizes and rejects two rules that share inputs but
/// disagree on outputs.
class messaging_interface {
public:
  messaging_interface() = default;

  messaging_interface(std::initializer_list<rule> rules)
    : messaging_interface(std::vector<rule>{rules}) {
    // nop
  }

  explicit messaging_interface(std::vector<rule> rules);

  const std::vector<rule>& rules() const noexcept {
    return rules_;
  }

  size_t size() const noexcept {
    return rules_.size();
  }

  bool empty() const noexcept {
    return rules_.empty();
  }

  bool contains(const rule& r) const noexcept;

  /// First rule whose inputs admit `msg`, or null.
  const rule* match_inputs(const message& msg) const;

  bool operator==(const messaging_interface&) const = default;

  /// Canonical wire encoding: a 2-byte rule count, then per rule a 1-byte
  /// input count and one 8-byte entry per input, the same for outputs,
  /// and a 1-byte alternative flag followed by the alternative outputs
  /// when set. Entries store atom constants with the top bit set; rules
  /// are already sorted, so equal interfaces encode identically.
  byte_buffer encode() const;

  static messaging_interface decode(byte_span bytes);

private:
  std::vector<rule> rules_; // sorted, deduplicated
};

std::string to_string(const messaging_interface& iface);

/// True iff every rule of `x` appears in `y` exactly.
bool is_subset(const messaging_interface& x, const messaging_interface& y);

} // namespace cafx

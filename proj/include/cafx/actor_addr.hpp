#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "cafx/detail/fnv.hpp"

namespace cafx {

/// Identifies one runtime instance; 16 random bytes drawn at startup.
struct node_id {
  std::array<uint8_t, 16> bytes{};

  auto operator<=>(const node_id&) const = default;

  bool valid() const noexcept {
    for (auto b : bytes)
      if (b != 0)
        return true;
    return false;
  }

  static node_id random();
};

std::string to_string(const node_id& node);

inline constexpr uint32_t invalid_actor_id = 0;

/// Globally unique actor identifier: hosting node plus a per-node id.
/// Actor id 0 is reserved as invalid.
struct actor_addr {
  node_id node;
  uint32_t id = invalid_actor_id;

  auto operator<=>(const actor_addr&) const = default;

  explicit operator bool() const noexcept {
    return id != invalid_actor_id;
  }
};

std::string to_string(const actor_addr& addr);

} // namespace cafx

template <>
struct std::hash<cafx::node_id> {
  size_t operator()(const cafx::node_id& n) const noexcept {
    return cafx::detail::fnv1a(n.bytes.data(), n.bytes.size());
  }
};

template <>
struct std::hash<cafx::actor_addr> {
  size_t operator()(const cafx::actor_addr& a) const noexcept {
    auto h = cafx::detail::fnv1a(a.node.bytes.data(), a.node.bytes.size());
    return cafx::detail::fnv1a_u32(h, a.id);
  }
};

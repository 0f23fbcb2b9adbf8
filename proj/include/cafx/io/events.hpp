#pragma once

#include <compare>
#include <cstdint>

#include "cafx/bytes.hpp"
#include "cafx/type_registry.hpp"

namespace cafx::io {

/// Opaque identifier of a point-to-point byte stream.
struct connection_handle {
  uint64_t id = 0;

  auto operator<=>(const connection_handle&) const = default;

  explicit operator bool() const noexcept {
    return id != 0;
  }
};

/// Opaque identifier of an endpoint others can connect to.
struct accept_handle {
  uint64_t id = 0;

  auto operator<=>(const accept_handle&) const = default;

  explicit operator bool() const noexcept {
    return id != 0;
  }
};

// -- events delivered to brokers as ordinary messages -----------------------

struct new_connection_msg {
  accept_handle source;
  connection_handle handle;

  bool operator==(const new_connection_msg&) const = default;
};

struct new_data_msg {
  connection_handle handle;
  byte_buffer buf;

  bool operator==(const new_data_msg&) const = default;
};

struct connection_closed_msg {
  connection_handle handle;

  bool operator==(const connection_closed_msg&) const = default;
};

struct acceptor_closed_msg {
  accept_handle handle;

  bool operator==(const acceptor_closed_msg&) const = default;
};

/// Governs when buffered input turns into a new_data_msg. A policy stays
/// active until it is replaced.
struct receive_policy {
  enum class mode : uint8_t { at_least, exactly, at_most };

  mode kind = mode::at_most;
  size_t amount = 1024;

  static receive_policy at_least(size_t n) noexcept {
    return {mode::at_least, n};
  }

  static receive_policy exactly(size_t n) noexcept {
    return {mode::exactly, n};
  }

  static receive_policy at_most(size_t n) noexcept {
    return {mode::at_most, n};
  }
};

/// Registers the broker event types in `reg`; idempotent per registry is
/// not required since the middleman calls it once for the global one.
void register_event_types(type_registry& reg);

/// Ensures the global registry knows the broker event types.
void init_event_types();

} // namespace cafx::io

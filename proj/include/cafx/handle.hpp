#pragma once

#include <utility>

#include "cafx/abstract_actor.hpp"
#include "cafx/interface.hpp"

namespace cafx {

/// Dynamic actor handle: identity plus a wildcard interface. Accepts any
/// message; receivers dispatch via pattern matching.
class actor {
public:
  actor() = default;

  explicit actor(abstract_actor_ptr ptr) : ptr_(std::move(ptr)) {
    // nop
  }

  actor_addr address() const noexcept {
    return ptr_ ? ptr_->address() : actor_addr{};
  }

  abstract_actor* ptr() const noexcept {
    return ptr_.get();
  }

  explicit operator bool() const noexcept {
    return ptr_ != nullptr;
  }

  bool operator==(const actor& other) const noexcept {
    return address() == other.address();
  }

private:
  abstract_actor_ptr ptr_;
};

/// Typed actor handle: identity plus a messaging interface. Sends are
/// checked against the interface before they reach the mailbox, and
/// handles narrow along the interface subset order.
class typed_actor {
public:
  typed_actor() = default;

  typed_actor(abstract_actor_ptr ptr, messaging_interface iface)
    : ptr_(std::move(ptr)), iface_(std::move(iface)) {
    // nop
  }

  actor_addr address() const noexcept {
    return ptr_ ? ptr_->address() : actor_addr{};
  }

  const messaging_interface& interface() const noexcept {
    return iface_;
  }

  abstract_actor* ptr() const noexcept {
    return ptr_.get();
  }

  explicit operator bool() const noexcept {
    return ptr_ != nullptr;
  }

  bool operator==(const typed_actor& other) const noexcept {
    return address() == other.address();
  }

private:
  abstract_actor_ptr ptr_;
  messaging_interface iface_;
};

/// Identity of a handle; two handles of any flavor point to the same
/// actor iff their addresses compare equal.
inline actor_addr handle_addr(const actor& h) noexcept {
  return h.address();
}

inline actor_addr handle_addr(const typed_actor& h) noexcept {
  return h.address();
}

/// Explicitly erases the interface of a typed handle. Typed and dynamic
/// handles never convert implicitly.
inline actor actor_cast(const typed_actor& h) {
  return actor{abstract_actor_ptr{h.ptr()}};
}

/// Re-types a handle to a narrower interface. The runtime subset check is
/// mandatory; narrowing to anything but a subset fails.
inline typed_actor narrow(const typed_actor& h,
                          const messaging_interface& target) {
  if (!is_subset(target, h.interface()))
    throw failure{errc::interface_mismatch,
                  "narrow requires a subset of the handle interface"};
  return typed_actor{abstract_actor_ptr{h.ptr()}, target};
}

} // namespace cafx

#pragma once

#include <cstdint>
#include <string>

#include "cafx/error.hpp"

namespace cafx {

/// Why an actor terminated. Normal exits do not propagate through links
/// as failures; every other kind does.
struct exit_reason {
  enum class kind : uint8_t {
    normal = 1,
    unhandled_error = 2,
    user = 3,
    link_propagated = 4,
  };

  kind k = kind::normal;
  uint32_t code = 1;

  bool operator==(const exit_reason&) const = default;

  bool is_normal() const noexcept {
    return k == kind::normal;
  }

  static exit_reason normal() noexcept {
    return {kind::normal, 1};
  }

  static exit_reason unhandled_error() noexcept {
    return {kind::unhandled_error, 2};
  }

  /// User-defined reasons start at code 16.
  static exit_reason user(uint32_t code) {
    if (code < 16)
      throw failure{errc::config_error, "user exit codes start at 16"};
    return {kind::user, code};
  }

  /// Wraps this reason as received through a link; the original code is
  /// preserved.
  exit_reason propagated() const noexcept {
    return {kind::link_propagated, code};
  }
};

std::string to_string(const exit_reason& reason);

} // namespace cafx

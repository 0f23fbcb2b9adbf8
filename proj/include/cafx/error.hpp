#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cafx {

/// Classifies everything that can go wrong inside the runtime.
enum class errc : uint8_t {
  none = 0,
  invalid_atom,
  unknown_type,
  codec_error,
  out_of_range,
  type_mismatch,
  interface_mismatch,
  interface_conflict,
  config_error,
  spawn_error,
  bind_failed,
  connect_failed,
  version_mismatch,
  request_timeout,
  request_down,
  broker_error,
  connection_lost,
};

std::string_view to_string(errc code) noexcept;

/// Exception thrown on precondition violations and failed operations.
class failure : public std::runtime_error {
public:
  failure(errc code, const std::string& what)
    : std::runtime_error(what), code_(code) {
    // nop
  }

  errc code() const noexcept {
    return code_;
  }

private:
  errc code_;
};

/// Error value passed to handlers, e.g. on the failure path of a request.
struct error {
  errc code = errc::none;
  std::string context;

  bool operator==(const error&) const = default;

  explicit operator bool() const noexcept {
    return code != errc::none;
  }
};

std::string to_string(const error& err);

} // namespace cafx

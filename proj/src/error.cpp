#include "cafx/error.hpp"

namespace cafx {

std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::none:
      return "none";
    case errc::invalid_atom:
      return "invalid_atom";
    case errc::unknown_type:
      return "unknown_type";
    case errc::codec_error:
      return "codec_error";
    case errc::out_of_range:
      return "out_of_range";
    case errc::type_mismatch:
      return "type_mismatch";
    case errc::interface_mismatch:
      return "interface_mismatch";
    case errc::interface_conflict:
      return "interface_conflict";
    case errc::config_error:
      return "config_error";
    case errc::spawn_error:
      return "spawn_error";
    case errc::bind_failed:
      return "bind_failed";
    case errc::connect_failed:
      return "connect_failed";
    case errc::version_mismatch:
      return "version_mismatch";
    case errc::request_timeout:
      return "request_timeout";
    case errc::request_down:
      return "request_down";
    case errc::broker_error:
      return "broker_error";
    case errc::connection_lost:
      return "connection_lost";
  }
  return "unknown";
}

std::string to_string(const error& err) {
  std::string result{to_string(err.code)};
  if (!err.context.empty()) {
    result += ": ";
    result += err.context;
  }
  return result;
}

} // namespace cafx

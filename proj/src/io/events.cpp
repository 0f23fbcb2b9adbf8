#include "cafx/io/events.hpp"

#include <mutex>

namespace cafx::io {

void register_event_types(type_registry& reg) {
  reg.add<connection_handle>("io.conn");
  reg.add<accept_handle>("io.acceptor");
  reg.add<new_connection_msg>("io.new_connection");
  reg.add<new_data_msg>("io.new_data");
  reg.add<connection_closed_msg>("io.connection_closed");
  reg.add<acceptor_closed_msg>("io.acceptor_closed");
}

void init_event_types() {
  static std::once_flag flag;
  std::call_once(flag, [] { register_event_types(type_registry::global()); });
}

} // namespace cafx::io

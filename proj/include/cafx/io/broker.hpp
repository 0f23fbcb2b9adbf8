#pragma once

#include "cafx/io/events.hpp"
#include "cafx/local_actor.hpp"

namespace cafx::io {

class middleman;

/// An actor performing asynchronous IO; lives in the middleman event loop
/// and receives network events as ordinary messages. Handlers run on the
/// multiplexer thread and must not block.
class broker : public local_actor {
public:
  broker(actor_config cfg, middleman* mm) : local_actor(cfg), mm_(mm) {
    // nop
  }

  middleman& parent() const noexcept {
    return *mm_;
  }

  /// Sets how many bytes the middleman aggregates before delivering the
  /// next new_data_msg on `conn`.
  void configure_read(connection_handle conn, receive_policy policy);

  /// Appends bytes to the connection's output buffer; the loop flushes.
  void write(connection_handle conn, byte_span bytes);

  void close(connection_handle conn);

  void close(accept_handle acceptor);

protected:
  void on_unblocked() override;

private:
  middleman* mm_;
};

} // namespace cafx::io

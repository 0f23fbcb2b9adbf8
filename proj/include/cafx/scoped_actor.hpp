#pragma once

#include <chrono>
#include <variant>

#include "cafx/local_actor.hpp"

namespace cafx {

class actor_system;

/// An actor owned by a regular thread: the owner drives the mailbox
/// inline and may block. Bridges non-actor code (main, tests, the
/// benchmark harness) into the messaging layer.
class blocking_actor : public local_actor {
public:
  explicit blocking_actor(actor_config cfg) : local_actor(cfg) {
    // nop
  }

  /// Waits for the next message matching `bhvr`; everything else stays
  /// retained in arrival order. Returns false on timeout or termination.
  bool receive(behavior bhvr,
               std::chrono::milliseconds timeout = infinite_timeout);

  /// Sends a request and blocks for its response, a failure, or the
  /// timeout. Unrelated messages are retained for later receives.
  std::variant<message, error>
  request(const actor& target, message content,
          std::chrono::milliseconds timeout = infinite_timeout);

  std::variant<message, error>
  request(const typed_actor& target, message content,
          std::chrono::milliseconds timeout = infinite_timeout);

  /// Terminates this actor; pending messages are dropped.
  void shutdown(exit_reason reason = exit_reason::normal());

private:
  std::variant<message, error>
  await_response(uint64_t response_id, std::chrono::milliseconds timeout);

  /// Blocks on the mailbox until a message arrives or `deadline` passes.
  /// Returns null on timeout.
  std::unique_ptr<envelope>
  blocking_dequeue(std::chrono::steady_clock::time_point deadline,
                   bool has_deadline);

  /// Handles exit signals; returns true if the envelope was consumed.
  bool consume_system(envelope& env);

  bool done_ = false;
};

/// RAII wrapper around a blocking actor.
class scoped_actor {
public:
  explicit scoped_actor(actor_system& sys);

  scoped_actor(const scoped_actor&) = delete;
  scoped_actor& operator=(const scoped_actor&) = delete;

  ~scoped_actor();

  blocking_actor* operator->() const noexcept {
    return self_.get();
  }

  blocking_actor& operator*() const noexcept {
    return *self_;
  }

  actor handle() const {
    return actor{abstract_actor_ptr{self_.get()}};
  }

  const actor_addr& address() const noexcept {
    return self_->address();
  }

private:
  intrusive_ptr<blocking_actor> self_;
};

} // namespace cafx

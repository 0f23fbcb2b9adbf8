#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cafx/actor_addr.hpp"
#include "cafx/envelope.hpp"
#include "cafx/exit_reason.hpp"
#include "cafx/ref_counted.hpp"

namespace cafx {

class actor_system;

/// Common core of local actors and remote proxies: identity, message
/// delivery, and the link/monitor bookkeeping that fires on termination.
class abstract_actor : public ref_counted {
public:
  abstract_actor(actor_system* sys, actor_addr addr)
    : system_(sys), addr_(addr) {
    // nop
  }

  const actor_addr& address() const noexcept {
    return addr_;
  }

  actor_system& home_system() const noexcept {
    return *system_;
  }

  /// Delivers an envelope; safe from any thread.
  virtual void enqueue(std::unique_ptr<envelope> env) = 0;

  bool terminated() const noexcept {
    return dead_.load(std::memory_order_acquire);
  }

  /// The exit reason recorded at termination; meaningless before.
  exit_reason recorded_reason() const noexcept {
    return reason_;
  }

  // -- links, monitors, exit hooks ------------------------------------------
  //
  // All of these linearize against termination: registrations against a
  // terminated actor trigger the corresponding notification immediately.

  /// Adds a one-way, stackable monitor; `observer` receives one down
  /// message per registration when this actor terminates.
  void add_monitor(const actor_addr& observer);

  /// Removes one monitor registration; returns false if none existed.
  bool remove_monitor(const actor_addr& observer);

  /// Adds one side of a link. Returns false when this actor is already
  /// terminated; the caller then delivers the exit notification itself.
  bool add_link_side(const actor_addr& peer);

  bool remove_link_side(const actor_addr& peer);

  /// Runs `hook` on termination (or immediately if already terminated);
  /// used by the remote layer to propagate deaths.
  void attach_on_exit(std::function<void(const exit_reason&)> hook);

  /// Records an outstanding request so the requester receives a down
  /// error if this actor terminates before responding.
  void register_pending_request(uint64_t response_id,
                                const actor_addr& requester);

  void drop_pending_request(uint64_t response_id);

protected:
  /// Marks the actor terminated and fires monitors, links, exit hooks and
  /// pending-request errors exactly once.
  void finalize(const exit_reason& reason);

  actor_system* system_;
  actor_addr addr_;

private:
  struct meta_block {
    std::vector<actor_addr> monitors;
    std::vector<actor_addr> links;
    std::vector<std::pair<uint64_t, actor_addr>> pending_requests;
    std::vector<std::function<void(const exit_reason&)>> exit_hooks;
  };

  class spin_guard {
  public:
    explicit spin_guard(std::atomic_flag& flag) : flag_(flag) {
      while (flag_.test_and_set(std::memory_order_acquire))
        /* spin */;
    }

    ~spin_guard() {
      flag_.clear(std::memory_order_release);
    }

  private:
    std::atomic_flag& flag_;
  };

  meta_block& lazy_meta();

  mutable std::atomic_flag meta_lock_ = ATOMIC_FLAG_INIT;
  std::unique_ptr<meta_block> meta_;
  std::atomic<bool> dead_{false};
  exit_reason reason_;
};

using abstract_actor_ptr = intrusive_ptr<abstract_actor>;

} // namespace cafx

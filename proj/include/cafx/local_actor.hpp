#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <semaphore>

#include "cafx/abstract_actor.hpp"
#include "cafx/behavior.hpp"
#include "cafx/envelope.hpp"
#include "cafx/handle.hpp"
#include "cafx/mailbox.hpp"
#include "cafx/resumable.hpp"

namespace cafx {

class actor_system;
class local_actor;
class response_token;

enum class actor_state : uint8_t { waiting, ready, running, done };

/// Marks a request that never expires.
inline constexpr std::chrono::milliseconds infinite_timeout{
  std::chrono::milliseconds::max()};

struct actor_config {
  enum class kind : uint8_t { scheduled, detached, blocking };

  actor_system* system = nullptr;
  actor_addr addr;
  kind run_mode = kind::scheduled;
};

struct spawn_options {
  bool detached = false;
};

/// A cooperatively scheduled actor: mailbox, current behavior, skipped
/// message handling, request/response bookkeeping, links and monitors.
/// Exactly one thread runs an actor at any time.
class local_actor : public abstract_actor, public resumable {
public:
  explicit local_actor(actor_config cfg);

  ~local_actor() override;

  // -- self API (only from the running actor) -------------------------------

  /// Replaces the behavior; previously skipped messages are re-examined
  /// against the new behavior before new arrivals.
  void become(behavior bhvr);

  /// Terminates after the current callback returns.
  void quit(exit_reason reason = exit_reason::normal());

  /// Converts incoming exit signals into ordinary (atom exit, source,
  /// reason) messages instead of terminating this actor.
  void trap_exit(bool enabled) noexcept {
    trap_exit_ = enabled;
  }

  const actor_addr& current_sender() const noexcept {
    return current_sender_;
  }

  /// The message currently dispatched to a handler; copying the returned
  /// handle shares (and thereby retains) the payload.
  message current_content() const {
    return current_content_ ? *current_content_ : message{};
  }

  void send(const actor& target, message content);

  void send(const typed_actor& target, message content);

  /// Sends a request; until the response (or a timeout/down error)
  /// arrives, this actor skips every other incoming message. Skipped
  /// messages stay in order and are reconsidered afterwards.
  response_token sync_send(const actor& target, message content,
                           std::chrono::milliseconds timeout
                           = infinite_timeout);

  response_token sync_send(const typed_actor& target, message content,
                           std::chrono::milliseconds timeout
                           = infinite_timeout);

  void link_to(const actor& other);
  void unlink_from(const actor& other);
  void monitor(const actor& other);
  void demonitor(const actor& other);

  // -- runtime integration ---------------------------------------------------

  void enqueue(std::unique_ptr<envelope> env) override;

  resume_result resume(size_t max_msgs) override;

  void ref_job() noexcept override {
    ref();
  }

  void deref_job() noexcept override {
    deref();
  }

  actor_state state() const noexcept {
    return state_.load(std::memory_order_acquire);
  }

  actor_config::kind run_mode() const noexcept {
    return run_mode_;
  }

  void set_factory(std::function<behavior(local_actor*)> factory) {
    factory_ = std::move(factory);
  }

  void set_declared_interface(messaging_interface iface) {
    declared_iface_ = std::move(iface);
  }

  const std::optional<messaging_interface>&
  declared_interface() const noexcept {
    return declared_iface_;
  }

  /// Runs the behavior factory and validates a declared interface.
  /// Scheduled actors do this on their first resume; typed spawns run it
  /// eagerly to fail fast.
  void initialize();

  bool initialized() const noexcept {
    return initialized_;
  }

  /// Times two threads ever running this actor at once (test plumbing).
  static uint64_t concurrent_resume_detected() noexcept;

protected:
  /// Class-based actors override this instead of passing a factory.
  virtual behavior make_behavior() {
    return {};
  }

  /// Called when an enqueue hits the parked mailbox; reschedules the
  /// actor. Brokers override this to wake their event loop instead.
  virtual void on_unblocked();

private:
  friend class response_token;
  friend class blocking_actor;
  friend class actor_system;

  struct env_queue {
    envelope* head = nullptr;
    envelope* tail = nullptr;

    bool empty() const noexcept {
      return head == nullptr;
    }

    void push(std::unique_ptr<envelope> env) noexcept {
      auto raw = env.release();
      raw->next = nullptr;
      if (tail == nullptr) {
        head = tail = raw;
      } else {
        tail->next = raw;
        tail = raw;
      }
    }

    std::unique_ptr<envelope> pop() noexcept {
      if (head == nullptr)
        return nullptr;
      auto raw = head;
      head = static_cast<envelope*>(raw->next);
      if (head == nullptr)
        tail = nullptr;
      raw->next = nullptr;
      return std::unique_ptr<envelope>{raw};
    }

    void append(env_queue&& other) noexcept {
      if (other.head == nullptr)
        return;
      if (tail == nullptr) {
        head = other.head;
        tail = other.tail;
      } else {
        tail->next = other.head;
        tail = other.tail;
      }
      other.head = other.tail = nullptr;
    }

    void clear() noexcept {
      while (head != nullptr)
        pop();
    }
  };

  struct pending_request_state {
    uint64_t response_id = 0;
    behavior on_response;
    std::function<void(const error&)> on_error;
  };

  void install_pending(uint64_t response_id, behavior on_response,
                       std::function<void(const error&)> on_error,
                       std::chrono::milliseconds timeout);

  uint64_t start_request(abstract_actor* target, message content);

  /// Next envelope to look at: the rescan queue first, then the mailbox.
  std::unique_ptr<envelope> next_envelope();

  void process(std::unique_ptr<envelope> env, size_t& handled);

  void handle_response(std::unique_ptr<envelope> env, size_t& handled);

  void respond(const envelope& request, message response);

  void retain(std::unique_ptr<envelope> env) {
    retained_.push(std::move(env));
  }

  resume_result do_terminate();

  cached_stack_mailbox mailbox_;
  behavior bhvr_;
  transform_slots scratch_;
  env_queue retained_;
  env_queue rescan_;
  bool rescan_requested_ = false;
  std::optional<pending_request_state> pending_;
  std::function<behavior(local_actor*)> factory_;
  std::optional<messaging_interface> declared_iface_;
  actor_addr current_sender_;
  uint64_t current_mid_ = 0;
  const message* current_content_ = nullptr;
  bool initialized_ = false;
  bool quit_requested_ = false;
  exit_reason quit_reason_;
  bool trap_exit_ = false;
  actor_config::kind run_mode_;
  std::atomic<actor_state> state_{actor_state::ready};
  std::atomic<bool> in_resume_{false};
  std::binary_semaphore wakeup_{0};
};

/// Base name for user-defined actors; function-based actors receive a
/// pointer of this type as `self`.
using event_based_actor = local_actor;

/// Handle to an outstanding request; `then` installs the response and
/// error handlers.
class response_token {
public:
  response_token(local_actor* self, uint64_t response_id,
                 std::chrono::milliseconds timeout)
    : self_(self), response_id_(response_id), timeout_(timeout) {
    // nop
  }

  /// Installs a behavior for the response message plus an optional error
  /// handler. Without an error handler, a failed request terminates the
  /// requester with a non-normal exit reason.
  void then(behavior on_response,
            std::function<void(const error&)> on_error = nullptr) && {
    self_->install_pending(response_id_, std::move(on_response),
                           std::move(on_error), timeout_);
  }

  template <class F>
    requires requires { &std::decay_t<F>::operator(); }
  void then(F f, std::function<void(const error&)> on_error = nullptr) && {
    std::move(*this).then(behavior{std::move(f)}, std::move(on_error));
  }

private:
  local_actor* self_;
  uint64_t response_id_;
  std::chrono::milliseconds timeout_;
};

} // namespace cafx

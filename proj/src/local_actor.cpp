#include "cafx/local_actor.hpp"

#include <cassert>

#include "cafx/actor_system.hpp"
#include "cafx/atoms.hpp"

namespace cafx {

namespace {

std::atomic<uint64_t> concurrent_resumes_{0};

// Every node in an actor mailbox is an envelope.
std::unique_ptr<envelope> to_envelope(std::unique_ptr<mailbox_node> node) {
  return std::unique_ptr<envelope>{static_cast<envelope*>(node.release())};
}

} // namespace

uint64_t local_actor::concurrent_resume_detected() noexcept {
  return concurrent_resumes_.load(std::memory_order_relaxed);
}

local_actor::local_actor(actor_config cfg)
  : abstract_actor(cfg.system, cfg.addr), run_mode_(cfg.run_mode) {
  // nop
}

local_actor::~local_actor() {
  retained_.clear();
  rescan_.clear();
}

void local_actor::become(behavior bhvr) {
  if (declared_iface_) {
    auto derived = derive_interface(bhvr);
    if (!derived || !(*derived == *declared_iface_))
      throw failure{errc::interface_mismatch,
                    "new behavior does not implement the declared interface"};
  }
  bhvr_ = std::move(bhvr);
  rescan_requested_ = true;
}

void local_actor::quit(exit_reason reason) {
  if (!quit_requested_) {
    quit_requested_ = true;
    quit_reason_ = reason;
  }
}

void local_actor::send(const actor& target, message content) {
  if (!target)
    return;
  target.ptr()->enqueue(make_envelope(std::move(content), addr_));
}

void local_actor::send(const typed_actor& target, message content) {
  if (!target)
    return;
  actor_system::typed_send_check(target, content);
  target.ptr()->enqueue(make_envelope(std::move(content), addr_));
}

response_token local_actor::sync_send(const actor& target, message content,
                                      std::chrono::milliseconds timeout) {
  auto rid = start_request(target.ptr(), std::move(content));
  return response_token{this, rid, timeout};
}

response_token local_actor::sync_send(const typed_actor& target,
                                      message content,
                                      std::chrono::milliseconds timeout) {
  actor_system::typed_send_check(target, content);
  auto rid = start_request(target.ptr(), std::move(content));
  return response_token{this, rid, timeout};
}

uint64_t local_actor::start_request(abstract_actor* target, message content) {
  auto request_id = system_->new_request_id();
  auto response_id = envelope::response_id(request_id);
  if (target != nullptr) {
    // Register first: if the target dies in between, the bookkeeping
    // flushes a down error to us.
    target->register_pending_request(response_id, addr_);
    target->enqueue(make_envelope(std::move(content), addr_, request_id));
  } else {
    enqueue(make_envelope(make_message(error{errc::request_down,
                                             "invalid target handle"}),
                          addr_, response_id));
  }
  return response_id;
}

void local_actor::install_pending(uint64_t response_id, behavior on_response,
                                  std::function<void(const error&)> on_error,
                                  std::chrono::milliseconds timeout) {
  if (pending_)
    throw failure{errc::config_error,
                  "only one outstanding synchronous request is supported"};
  pending_ = pending_request_state{response_id, std::move(on_response),
                                   std::move(on_error)};
  if (timeout != infinite_timeout) {
    intrusive_ptr<local_actor> strong{this};
    system_->clock().schedule(
      actor_clock::clock_type::now() + timeout, [strong, response_id] {
        if (!strong->terminated())
          strong->enqueue(
            make_envelope(make_message(error{errc::request_timeout,
                                             "request timed out"}),
                          strong->address(), response_id));
      });
  }
}

void local_actor::link_to(const actor& other) {
  if (other)
    cafx::link(actor{abstract_actor_ptr{this}}, other);
}

void local_actor::unlink_from(const actor& other) {
  if (other)
    cafx::unlink(actor{abstract_actor_ptr{this}}, other);
}

void local_actor::monitor(const actor& other) {
  if (other)
    cafx::monitor(actor{abstract_actor_ptr{this}}, other);
}

void local_actor::demonitor(const actor& other) {
  if (other)
    cafx::demonitor(actor{abstract_actor_ptr{this}}, other);
}

void local_actor::enqueue(std::unique_ptr<envelope> env) {
  std::unique_ptr<mailbox_node> node{env.release()};
  switch (mailbox_.enqueue(node)) {
    case enqueue_result::unblocked_reader:
      state_.store(actor_state::ready, std::memory_order_release);
      on_unblocked();
      break;
    case enqueue_result::plain_success:
      break;
    case enqueue_result::rejected_closed:
      // Messages to terminated actors are dropped; monitors are the
      // detection mechanism. Down errors for requests were produced by
      // the pending-request bookkeeping already.
      break;
  }
}

void local_actor::on_unblocked() {
  switch (run_mode_) {
    case actor_config::kind::scheduled:
      system_->schedule_job(this);
      break;
    case actor_config::kind::detached:
    case actor_config::kind::blocking:
      wakeup_.release();
      break;
  }
}

void local_actor::initialize() {
  if (initialized_)
    return;
  initialized_ = true;
  auto b = factory_ ? factory_(this) : make_behavior();
  factory_ = nullptr;
  if (declared_iface_) {
    auto derived = derive_interface(b);
    if (!derived || !(*derived == *declared_iface_))
      throw failure{errc::interface_mismatch,
                    "behavior does not implement the declared interface"};
  }
  if (b.defined())
    bhvr_ = std::move(b);
  // A function actor that neither installs a behavior nor quits is done.
  if (!bhvr_.defined() && !quit_requested_)
    quit(exit_reason::normal());
}

std::unique_ptr<envelope> local_actor::next_envelope() {
  if (rescan_requested_) {
    rescan_requested_ = false;
    rescan_.append(std::move(retained_));
  }
  if (auto env = rescan_.pop())
    return env;
  return to_envelope(mailbox_.dequeue());
}

resumable::resume_result local_actor::resume(size_t max_msgs) {
  if (in_resume_.exchange(true, std::memory_order_acquire))
    concurrent_resumes_.fetch_add(1, std::memory_order_relaxed);
  struct resume_guard {
    std::atomic<bool>& flag;
    ~resume_guard() {
      flag.store(false, std::memory_order_release);
    }
  } guard{in_resume_};
  state_.store(actor_state::running, std::memory_order_release);
  if (!initialized_) {
    try {
      initialize();
    } catch (...) {
      quit_requested_ = true;
      quit_reason_ = exit_reason::unhandled_error();
    }
    if (quit_requested_)
      return do_terminate();
  }
  size_t handled = 0;
  for (;;) {
    if (handled >= max_msgs) {
      if (!mailbox_.empty() || rescan_requested_ || !rescan_.empty()) {
        state_.store(actor_state::ready, std::memory_order_release);
        return resume_result::yielded;
      }
      state_.store(actor_state::waiting, std::memory_order_release);
      if (mailbox_.try_block() || mailbox_.blocked())
        return resume_result::awaiting;
      state_.store(actor_state::ready, std::memory_order_release);
      return resume_result::yielded;
    }
    auto env = next_envelope();
    if (!env) {
      state_.store(actor_state::waiting, std::memory_order_release);
      // an already-parked mailbox means this was a spurious extra run
      if (mailbox_.try_block() || mailbox_.blocked())
        return resume_result::awaiting;
      state_.store(actor_state::running, std::memory_order_release);
      continue;
    }
    try {
      process(std::move(env), handled);
    } catch (...) {
      quit_requested_ = true;
      quit_reason_ = exit_reason::unhandled_error();
    }
    if (quit_requested_)
      return do_terminate();
  }
}

void local_actor::process(std::unique_ptr<envelope> env, size_t& handled) {
  if (env->cat == envelope::category::exit_signal) {
    auto reason = env->content.get<exit_reason>(2);
    if (env->hard_kill) {
      quit_requested_ = true;
      quit_reason_ = reason;
      return;
    }
    if (!trap_exit_) {
      if (!reason.is_normal()) {
        quit_requested_ = true;
        quit_reason_ = reason.propagated();
      }
      return;
    }
    env->cat = envelope::category::ordinary;
    // fall through: trapped exits are ordinary messages
  }
  if (env->is_response()) {
    handle_response(std::move(env), handled);
    return;
  }
  if (pending_) {
    // Synchronous-send mode: skip everything but the awaited response.
    retain(std::move(env));
    return;
  }
  current_sender_ = env->sender;
  current_mid_ = env->mid;
  current_content_ = &env->content;
  auto outcome = match(bhvr_, env->content, scratch_);
  current_sender_ = actor_addr{};
  current_mid_ = 0;
  current_content_ = nullptr;
  if (!outcome.matched) {
    retain(std::move(env));
    return;
  }
  ++handled;
  if (outcome.response)
    respond(*env, std::move(*outcome.response));
}

void local_actor::handle_response(std::unique_ptr<envelope> env,
                                  size_t& handled) {
  if (!pending_ || env->mid != pending_->response_id)
    return; // stale response or expired timeout notice
  auto pr = std::move(*pending_);
  pending_.reset();
  rescan_requested_ = true; // reconsider skipped messages
  ++handled;
  current_sender_ = env->sender;
  auto fail = [this, &pr](const error& reason) {
    if (pr.on_error) {
      pr.on_error(reason);
    } else {
      quit_requested_ = true;
      quit_reason_ = exit_reason::unhandled_error();
    }
  };
  if (env->content.size() == 1
      && env->content.type_at(0) == builtin::error) {
    fail(env->content.get<error>(0));
  } else {
    auto outcome = match(pr.on_response, env->content, scratch_);
    if (!outcome.matched)
      fail(error{errc::type_mismatch, "unexpected response signature"});
  }
  current_sender_ = actor_addr{};
}

void local_actor::respond(const envelope& request, message response) {
  if (request.is_request()) {
    auto rid = envelope::response_id(request.mid);
    drop_pending_request(rid);
    system_->deliver(request.sender,
                     make_envelope(std::move(response), addr_, rid));
  } else if (request.sender) {
    system_->deliver(request.sender,
                     make_envelope(std::move(response), addr_));
  }
}

resumable::resume_result local_actor::do_terminate() {
  state_.store(actor_state::done, std::memory_order_release);
  auto dropped = mailbox_.close();
  dropped.clear();
  retained_.clear();
  rescan_.clear();
  bhvr_ = behavior{};
  pending_.reset();
  finalize(quit_reason_);
  system_->unregister_actor(addr_.id);
  return resume_result::finished;
}

} // namespace cafx

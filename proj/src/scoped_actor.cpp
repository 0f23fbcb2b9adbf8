#include "cafx/scoped_actor.hpp"

#include "cafx/actor_system.hpp"

namespace cafx {

namespace {

using clock_type = std::chrono::steady_clock;

} // namespace

std::unique_ptr<envelope>
blocking_actor::blocking_dequeue(clock_type::time_point deadline,
                                 bool has_deadline) {
  for (;;) {
    if (auto env = next_envelope())
      return env;
    if (done_)
      return nullptr;
    if (!mailbox_.try_block())
      continue;
    state_.store(actor_state::waiting, std::memory_order_release);
    bool signaled;
    if (has_deadline)
      signaled = wakeup_.try_acquire_until(deadline);
    else {
      wakeup_.acquire();
      signaled = true;
    }
    state_.store(actor_state::running, std::memory_order_release);
    if (!signaled) {
      if (mailbox_.try_unblock())
        return nullptr; // timed out with nothing in flight
      // An enqueue won the race and released a permit; consume it.
      wakeup_.try_acquire();
    }
  }
}

bool blocking_actor::consume_system(envelope& env) {
  if (env.cat != envelope::category::exit_signal)
    return false;
  auto reason = env.content.get<exit_reason>(2);
  if (env.hard_kill || (!trap_exit_ && !reason.is_normal())) {
    done_ = true;
    return true;
  }
  if (!trap_exit_)
    return true; // untrapped normal exit signal: ignore
  env.cat = envelope::category::ordinary;
  return false;
}

bool blocking_actor::receive(behavior bhvr,
                             std::chrono::milliseconds timeout) {
  if (done_)
    return false;
  initialized_ = true;
  auto has_deadline = timeout != infinite_timeout;
  auto deadline = clock_type::now() + timeout;
  for (;;) {
    auto env = blocking_dequeue(deadline, has_deadline);
    if (!env)
      return false;
    if (consume_system(*env)) {
      if (done_)
        return false;
      continue;
    }
    if (env->is_response())
      continue; // stale response
    current_sender_ = env->sender;
    current_mid_ = env->mid;
    current_content_ = &env->content;
    auto outcome = match(bhvr, env->content, scratch_);
    current_sender_ = actor_addr{};
    current_mid_ = 0;
    current_content_ = nullptr;
    if (!outcome.matched) {
      retain(std::move(env));
      continue;
    }
    if (outcome.response)
      respond(*env, std::move(*outcome.response));
    return true;
  }
}

std::variant<message, error>
blocking_actor::request(const actor& target, message content,
                        std::chrono::milliseconds timeout) {
  auto rid = start_request(target.ptr(), std::move(content));
  return await_response(rid, timeout);
}

std::variant<message, error>
blocking_actor::request(const typed_actor& target, message content,
                        std::chrono::milliseconds timeout) {
  actor_system::typed_send_check(target, content);
  auto rid = start_request(target.ptr(), std::move(content));
  return await_response(rid, timeout);
}

std::variant<message, error>
blocking_actor::await_response(uint64_t response_id,
                               std::chrono::milliseconds timeout) {
  initialized_ = true;
  auto has_deadline = timeout != infinite_timeout;
  auto deadline = clock_type::now() + timeout;
  for (;;) {
    auto env = blocking_dequeue(deadline, has_deadline);
    if (!env) {
      if (done_)
        return error{errc::request_down, "receiver shut down"};
      return error{errc::request_timeout, "request timed out"};
    }
    if (consume_system(*env)) {
      if (done_)
        return error{errc::request_down, "receiver shut down"};
      continue;
    }
    if (env->mid == response_id) {
      if (env->content.size() == 1
          && env->content.type_at(0) == builtin::error)
        return env->content.get<error>(0);
      return std::move(env->content);
    }
    if (env->is_response())
      continue; // stale response to an older request
    retain(std::move(env));
  }
}

void blocking_actor::shutdown(exit_reason reason) {
  if (done_ && terminated())
    return;
  done_ = true;
  state_.store(actor_state::done, std::memory_order_release);
  mailbox_.close();
  retained_.clear();
  rescan_.clear();
  finalize(reason);
  system_->unregister_actor(address().id);
}

scoped_actor::scoped_actor(actor_system& sys) {
  actor_config cfg;
  cfg.system = &sys;
  cfg.addr = actor_addr{sys.node(), sys.next_actor_id()};
  cfg.run_mode = actor_config::kind::blocking;
  self_ = make_counted<blocking_actor>(cfg);
  sys.register_actor(abstract_actor_ptr{self_.get()});
}

scoped_actor::~scoped_actor() {
  self_->shutdown();
}

} // namespace cafx

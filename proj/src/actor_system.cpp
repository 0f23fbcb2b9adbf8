#include "cafx/actor_system.hpp"

#include <cstdio>

#include "cafx/atoms.hpp"

namespace cafx {

actor_system::actor_system(scheduler_config cfg)
  : node_(node_id::random()),
    sched_(std::make_unique<policy_scheduler<work_stealing>>(cfg)) {
  // nop
}

actor_system::~actor_system() {
  closing_.store(true, std::memory_order_release);
  kill_all();
  // Wait for every actor to finish; workers keep running until then.
  {
    std::unique_lock guard{drain_mtx_};
    while (actor_count_.load(std::memory_order_acquire) != 0) {
      if (drain_cv_.wait_for(guard, std::chrono::seconds(5))
          == std::cv_status::timeout) {
        fprintf(stderr, "[cafx] shutdown waiting for %zu actors\n",
                actor_count_.load());
        guard.unlock();
        kill_all();
        guard.lock();
      }
    }
  }
  if (started_.load(std::memory_order_acquire))
    sched_->stop();
  clock_.stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard guard{threads_mtx_};
    threads.swap(adopted_threads_);
  }
  for (auto& t : threads)
    if (t.joinable())
      t.join();
}

void actor_system::set_scheduler(scheduler_config cfg) {
  std::lock_guard guard{start_mtx_};
  if (started_.load(std::memory_order_acquire))
    throw failure{errc::config_error,
                  "cannot reconfigure a running scheduler"};
  auto hooks = std::move(sched_->hooks);
  sched_ = std::make_unique<policy_scheduler<work_stealing>>(cfg);
  sched_->hooks = std::move(hooks);
}

void actor_system::set_scheduler_hooks(scheduler_hooks hooks) {
  std::lock_guard guard{start_mtx_};
  if (started_.load(std::memory_order_acquire))
    throw failure{errc::config_error,
                  "cannot install hooks on a running scheduler"};
  sched_->hooks = std::move(hooks);
}

void actor_system::ensure_started() {
  if (started_.load(std::memory_order_acquire))
    return;
  std::lock_guard guard{start_mtx_};
  if (!started_.load(std::memory_order_relaxed)) {
    sched_->start(this);
    started_.store(true, std::memory_order_release);
  }
}

void actor_system::anon_send(const actor& target, message content) {
  if (target)
    target.ptr()->enqueue(make_envelope(std::move(content), actor_addr{}));
}

void actor_system::anon_send(const typed_actor& target, message content) {
  if (!target)
    return;
  typed_send_check(target, content);
  target.ptr()->enqueue(make_envelope(std::move(content), actor_addr{}));
}

void actor_system::typed_send_check(const typed_actor& target,
                                    const message& content) {
  if (target.interface().match_inputs(content) == nullptr)
    throw failure{errc::type_mismatch,
                  "message does not match any rule of the target interface: "
                    + to_string(content)};
}

abstract_actor_ptr actor_system::resolve(const actor_addr& addr) const {
  if (!addr)
    return nullptr;
  if (addr.node == node_) {
    auto& shard = shard_of(addr.id);
    std::lock_guard guard{shard.mtx};
    auto i = shard.entries.find(addr.id);
    return i == shard.entries.end() ? nullptr : i->second;
  }
  remote_resolver remote;
  {
    std::lock_guard guard{remote_mtx_};
    remote = remote_;
  }
  return remote ? remote(addr) : nullptr;
}

void actor_system::set_remote_resolver(remote_resolver f) {
  std::lock_guard guard{remote_mtx_};
  remote_ = std::move(f);
}

void actor_system::await_all_actors_done() {
  std::unique_lock guard{drain_mtx_};
  drain_cv_.wait(guard, [this] {
    return actor_count_.load(std::memory_order_acquire) == 0;
  });
}

void actor_system::schedule_job(resumable* job) {
  ensure_started();
  job->ref_job();
  sched_->schedule(job);
}

void actor_system::deliver(const actor_addr& to,
                           std::unique_ptr<envelope> env) {
  if (auto ptr = resolve(to))
    ptr->enqueue(std::move(env));
}

void actor_system::send_exit(const actor_addr& to, const actor_addr& from,
                             const exit_reason& reason, bool hard) {
  auto ptr = resolve(to);
  if (!ptr)
    return;
  auto env = make_envelope(make_message(exit_atom::value, from, reason),
                           from);
  env->cat = envelope::category::exit_signal;
  env->hard_kill = hard;
  ptr->enqueue(std::move(env));
}

void actor_system::register_actor(abstract_actor_ptr ptr) {
  auto id = ptr->address().id;
  auto& shard = shard_of(id);
  {
    std::lock_guard guard{shard.mtx};
    shard.entries.emplace(id, std::move(ptr));
  }
  actor_count_.fetch_add(1, std::memory_order_acq_rel);
}

void actor_system::unregister_actor(uint32_t id) {
  auto& shard = shard_of(id);
  {
    std::lock_guard guard{shard.mtx};
    if (shard.entries.erase(id) == 0)
      return;
  }
  if (actor_count_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
    std::lock_guard guard{drain_mtx_};
    drain_cv_.notify_all();
  }
}

void actor_system::adopt_thread(std::thread t) {
  std::lock_guard guard{threads_mtx_};
  adopted_threads_.push_back(std::move(t));
}

actor_config actor_system::make_config(spawn_options opts) {
  if (closing_.load(std::memory_order_acquire))
    throw failure{errc::spawn_error, "actor system is shutting down"};
  actor_config cfg;
  cfg.system = this;
  cfg.addr = actor_addr{node_, next_actor_id()};
  cfg.run_mode = opts.detached ? actor_config::kind::detached
                               : actor_config::kind::scheduled;
  return cfg;
}

actor actor_system::spawn_impl(std::function<behavior(local_actor*)> factory,
                               spawn_options opts) {
  auto ptr = make_counted<local_actor>(make_config(opts));
  ptr->set_factory(std::move(factory));
  launch_lazy(ptr, opts);
  return actor{abstract_actor_ptr{ptr.get()}};
}

void actor_system::launch_lazy(intrusive_ptr<local_actor> ptr,
                               spawn_options opts) {
  register_actor(abstract_actor_ptr{ptr.get()});
  if (opts.detached) {
    launch_detached(std::move(ptr));
    return;
  }
  schedule_job(ptr.get());
}

void actor_system::launch_eager(intrusive_ptr<local_actor> ptr,
                                spawn_options opts) {
  register_actor(abstract_actor_ptr{ptr.get()});
  try {
    ptr->initialize();
  } catch (...) {
    ptr->quit(exit_reason::unhandled_error());
    ptr->do_terminate();
    throw;
  }
  if (ptr->quit_requested_) {
    ptr->do_terminate();
    return;
  }
  if (opts.detached) {
    launch_detached(std::move(ptr));
    return;
  }
  ptr->state_.store(actor_state::waiting, std::memory_order_release);
  if (!ptr->mailbox_.try_block()) {
    // Someone already sent to the fresh actor; run it.
    ptr->state_.store(actor_state::ready, std::memory_order_release);
    schedule_job(ptr.get());
  }
}

void actor_system::launch_detached(intrusive_ptr<local_actor> ptr) {
  ensure_started(); // the clock and shutdown path assume a running system
  adopt_thread(std::thread{[self = std::move(ptr)] {
    for (;;) {
      auto result = self->resume(SIZE_MAX);
      if (result == resumable::resume_result::finished)
        return;
      if (result == resumable::resume_result::awaiting)
        self->wakeup_.acquire();
      // yielded: loop again immediately
    }
  }});
}

void actor_system::kill_all() {
  std::vector<abstract_actor_ptr> victims;
  for (auto& shard : shards_) {
    std::lock_guard guard{shard.mtx};
    for (auto& [id, ptr] : shard.entries)
      victims.push_back(ptr);
  }
  for (auto& victim : victims) {
    auto env = make_envelope(make_message(exit_atom::value, actor_addr{},
                                          exit_reason::normal()),
                             actor_addr{});
    env->cat = envelope::category::exit_signal;
    env->hard_kill = true;
    victim->enqueue(std::move(env));
  }
}

// -- link and monitor operations ----------------------------------------------

void link(const actor& a, const actor& b) {
  if (!a || !b || a.address() == b.address())
    return;
  auto& sys = a.ptr()->home_system();
  if (!a.ptr()->add_link_side(b.address())) {
    sys.send_exit(b.address(), a.address(), a.ptr()->recorded_reason());
    return;
  }
  if (!b.ptr()->add_link_side(a.address())) {
    a.ptr()->remove_link_side(b.address());
    sys.send_exit(a.address(), b.address(), b.ptr()->recorded_reason());
  }
}

void unlink(const actor& a, const actor& b) {
  if (!a || !b)
    return;
  a.ptr()->remove_link_side(b.address());
  b.ptr()->remove_link_side(a.address());
}

void monitor(const actor& observer, const actor& observed) {
  if (!observer || !observed)
    return;
  observed.ptr()->add_monitor(observer.address());
}

void demonitor(const actor& observer, const actor& observed) {
  if (!observer || !observed)
    return;
  observed.ptr()->remove_monitor(observer.address());
}

} // namespace cafx

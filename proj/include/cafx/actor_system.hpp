#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "cafx/actor_clock.hpp"
#include "cafx/handle.hpp"
#include "cafx/local_actor.hpp"
#include "cafx/scheduler.hpp"

namespace cafx {

/// One runtime instance: actor registry, scheduler, clock and node
/// identity. Typically a process hosts one instance; tests and the
/// loopback transport run several.
class actor_system {
public:
  actor_system() : actor_system(scheduler_config::from_env()) {
    // nop
  }

  explicit actor_system(scheduler_config cfg);

  actor_system(const actor_system&) = delete;
  actor_system& operator=(const actor_system&) = delete;

  /// Hard-kills every remaining actor, waits for the registry to drain,
  /// then joins all runtime threads.
  ~actor_system();

  const node_id& node() const noexcept {
    return node_;
  }

  // -- configuration (before the scheduler starts) ---------------------------

  /// Replaces the scheduler configuration; fails once workers run.
  void set_scheduler(scheduler_config cfg);

  void set_scheduler_hooks(scheduler_hooks hooks);

  scheduler& sched() noexcept {
    return *sched_;
  }

  // -- spawning ---------------------------------------------------------------

  /// Spawns a dynamically typed actor from a factory: `behavior()`,
  /// `behavior(event_based_actor*)`, or a void function of the same
  /// shapes (such actors terminate unless they install a behavior).
  template <class F>
    requires(!std::is_base_of_v<local_actor, std::decay_t<F>>)
  actor spawn(F factory, spawn_options opts = {}) {
    return spawn_impl(normalize_factory(std::move(factory)), opts);
  }

  /// Spawns a class-based actor (T derives from event_based_actor and
  /// overrides make_behavior).
  template <class T, class... Ts>
    requires std::is_base_of_v<local_actor, T>
  actor spawn(Ts&&... xs) {
    auto ptr = make_counted<T>(make_config(spawn_options{}),
                               std::forward<Ts>(xs)...);
    launch_lazy(ptr, spawn_options{});
    return actor{abstract_actor_ptr{ptr.get()}};
  }

  /// Spawns an actor whose behavior must implement `iface` in every
  /// state; mismatches surface here as interface_mismatch.
  template <class F>
  typed_actor spawn_typed(messaging_interface iface, F factory,
                          spawn_options opts = {}) {
    auto ptr = make_counted<local_actor>(make_config(opts));
    ptr->set_factory(normalize_factory(std::move(factory)));
    ptr->set_declared_interface(iface);
    launch_eager(ptr, opts);
    return typed_actor{abstract_actor_ptr{ptr.get()}, std::move(iface)};
  }

  // -- messaging from non-actor contexts --------------------------------------

  void anon_send(const actor& target, message content);

  void anon_send(const typed_actor& target, message content);

  /// Checks `content` against the interface of a typed handle.
  static void typed_send_check(const typed_actor& target,
                               const message& content);

  // -- resolution and identity -------------------------------------------------

  /// Resolves an address to a live local actor or, via the installed
  /// remote resolver, to a proxy. Null when unknown or terminated.
  abstract_actor_ptr resolve(const actor_addr& addr) const;

  using remote_resolver = std::function<abstract_actor_ptr(const actor_addr&)>;

  /// Installed by the remote-messaging layer.
  void set_remote_resolver(remote_resolver f);

  actor_clock& clock() noexcept {
    return clock_;
  }

  uint64_t new_request_id() noexcept {
    return next_request_id_.fetch_add(1, std::memory_order_relaxed);
  }

  size_t alive_actors() const noexcept {
    return actor_count_.load(std::memory_order_acquire);
  }

  void await_all_actors_done();

  // -- runtime plumbing --------------------------------------------------------

  /// Takes a job reference and hands the job to the scheduler.
  void schedule_job(resumable* job);

  void deliver(const actor_addr& to, std::unique_ptr<envelope> env);

  void send_exit(const actor_addr& to, const actor_addr& from,
                 const exit_reason& reason, bool hard = false);

  void register_actor(abstract_actor_ptr ptr);

  void unregister_actor(uint32_t id);

  uint32_t next_actor_id() noexcept {
    return next_actor_id_.fetch_add(1, std::memory_order_relaxed);
  }

  /// Registers a thread the system must join on shutdown (detached
  /// actors).
  void adopt_thread(std::thread t);

private:
  template <class F>
  static std::function<behavior(local_actor*)> normalize_factory(F f) {
    if constexpr (std::is_invocable_v<F, event_based_actor*>) {
      using R = std::invoke_result_t<F, event_based_actor*>;
      if constexpr (std::is_void_v<R>)
        return [f = std::move(f)](local_actor* self) {
          f(self);
          return behavior{};
        };
      else
        return [f = std::move(f)](local_actor* self) { return f(self); };
    } else {
      using R = std::invoke_result_t<F>;
      if constexpr (std::is_void_v<R>)
        return [f = std::move(f)](local_actor*) {
          f();
          return behavior{};
        };
      else
        return [f = std::move(f)](local_actor*) { return f(); };
    }
  }

  actor_config make_config(spawn_options opts);

  actor spawn_impl(std::function<behavior(local_actor*)> factory,
                   spawn_options opts);

  /// Registers and schedules the first run; initialization happens on a
  /// worker.
  void launch_lazy(intrusive_ptr<local_actor> ptr, spawn_options opts);

  /// Initializes on the calling thread (so interface violations throw
  /// here), then parks or schedules the actor.
  void launch_eager(intrusive_ptr<local_actor> ptr, spawn_options opts);

  void launch_detached(intrusive_ptr<local_actor> ptr);

  void ensure_started();

  void kill_all();

  static constexpr size_t num_shards = 16;

  struct registry_shard {
    mutable std::mutex mtx;
    std::unordered_map<uint32_t, abstract_actor_ptr> entries;
  };

  registry_shard& shard_of(uint32_t id) const noexcept {
    return shards_[id % num_shards];
  }

  node_id node_;
  std::unique_ptr<scheduler> sched_;
  actor_clock clock_;
  std::atomic<uint64_t> next_request_id_{1};
  std::atomic<uint32_t> next_actor_id_{1};
  mutable std::array<registry_shard, num_shards> shards_;
  std::atomic<size_t> actor_count_{0};
  std::mutex drain_mtx_;
  std::condition_variable drain_cv_;
  std::mutex start_mtx_;
  std::atomic<bool> started_{false};
  std::atomic<bool> closing_{false};
  mutable std::mutex remote_mtx_;
  remote_resolver remote_;
  std::mutex threads_mtx_;
  std::vector<std::thread> adopted_threads_;
};

// -- link and monitor operations ----------------------------------------------

/// Links two actors: when either terminates with a non-normal reason, the
/// other receives an exit signal (terminating it unless it traps exits).
void link(const actor& a, const actor& b);

void unlink(const actor& a, const actor& b);

/// One-way, stackable death notification: `observer` receives one
/// (atom down, source, reason) message per registration.
void monitor(const actor& observer, const actor& observed);

void demonitor(const actor& observer, const actor& observed);

} // namespace cafx

#pragma once

#include <atomic>
#include <chrono>
#include <concepts>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "cafx/error.hpp"
#include "cafx/resumable.hpp"

namespace cafx {

class actor_system;

/// Scheduler dimensions. Values left at their defaults pick up the
/// CAFX_WORKERS and CAFX_MAX_MSGS environment variables.
struct scheduler_config {
  /// Worker thread count; 0 selects the detected hardware concurrency.
  size_t num_workers = 0;
  /// Messages an actor may consume per run; effectively unlimited by
  /// default.
  size_t max_msgs = SIZE_MAX;
  /// Steal backoff: failed sweeps spin first, then yield, then sleep.
  size_t steal_spin_sweeps = 100;
  size_t steal_yield_sweeps = 100;
  std::chrono::microseconds steal_sleep{1000};

  /// Applies CAFX_WORKERS and CAFX_MAX_MSGS (decimal) on top of the
  /// defaults.
  static scheduler_config from_env();

  size_t effective_workers() const noexcept {
    if (num_workers > 0)
      return num_workers;
    auto n = std::thread::hardware_concurrency();
    return n > 0 ? n : 1;
  }
};

/// Test instrumentation invoked around every job run.
struct scheduler_hooks {
  std::function<void(resumable*)> before_resume;
  std::function<void(resumable*)> after_resume;
  std::function<void(resumable*)> after_completion;
};

/// Always-on counters describing scheduler activity.
class scheduler_stats {
public:
  void init(size_t num_workers) {
    per_worker_placements_ = std::vector<std::atomic<uint64_t>>(num_workers);
  }

  std::atomic<uint64_t> central_enqueues{0};
  std::atomic<uint64_t> steals{0};
  std::atomic<uint64_t> before_resumes{0};
  std::atomic<uint64_t> after_resumes{0};
  std::atomic<uint64_t> completions{0};

  void note_placement(size_t worker) {
    per_worker_placements_[worker].fetch_add(1, std::memory_order_relaxed);
  }

  /// Jobs the coordinator placed per worker (round-robin bootstrap).
  std::vector<uint64_t> placements() const {
    std::vector<uint64_t> result;
    result.reserve(per_worker_placements_.size());
    for (const auto& x : per_worker_placements_)
      result.push_back(x.load(std::memory_order_relaxed));
    return result;
  }

private:
  std::vector<std::atomic<uint64_t>> per_worker_placements_;
};

/// Double-ended job queue: the owner works on the front, thieves take
/// from the back. Any linearizable implementation qualifies; this one
/// serializes through a mutex.
class worker_deque {
public:
  void push_front(resumable* job) {
    std::lock_guard guard{mtx_};
    items_.push_front(job);
  }

  void push_back(resumable* job) {
    std::lock_guard guard{mtx_};
    items_.push_back(job);
  }

  resumable* pop_front() {
    std::lock_guard guard{mtx_};
    if (items_.empty())
      return nullptr;
    auto job = items_.front();
    items_.pop_front();
    return job;
  }

  resumable* pop_back() {
    std::lock_guard guard{mtx_};
    if (items_.empty())
      return nullptr;
    auto job = items_.back();
    items_.pop_back();
    return job;
  }

  size_t size() const {
    std::lock_guard guard{mtx_};
    return items_.size();
  }

private:
  mutable std::mutex mtx_;
  std::deque<resumable*> items_;
};

/// Base interface so the runtime can stay agnostic of the policy type.
class scheduler {
public:
  virtual ~scheduler() = default;

  virtual void start(actor_system* sys) = 0;

  /// Joins all workers; queues must be drained (no live actors) first.
  virtual void stop() = 0;

  /// Schedules a ready job from any context: jobs from worker threads go
  /// to the local deque front, everything else round-robins centrally.
  virtual void schedule(resumable* job) = 0;

  virtual bool shutting_down() const noexcept = 0;

  size_t num_workers() const noexcept {
    return config_.effective_workers();
  }

  size_t max_msgs() const noexcept {
    return config_.max_msgs;
  }

  const scheduler_config& config() const noexcept {
    return config_;
  }

  scheduler_stats& stats() noexcept {
    return stats_;
  }

  scheduler_hooks hooks;

protected:
  scheduler_config config_;
  scheduler_stats stats_;
};

namespace detail {

/// Identifies the scheduler context of the current thread, so enqueues
/// from worker threads can stay on their worker.
struct scheduler_tls {
  scheduler* owner = nullptr;
  void* worker = nullptr;
};

inline thread_local scheduler_tls tls_sched;

} // namespace detail

template <class Policy>
class policy_scheduler;

/// One worker thread of a policy scheduler.
template <class Policy>
class scheduler_worker {
public:
  scheduler_worker(size_t id, policy_scheduler<Policy>* parent, uint64_t seed)
    : id_(id), parent_(parent), data(seed) {
    // nop
  }

  void start() {
    thread_ = std::thread{[this] { run(); }};
  }

  void join() {
    if (thread_.joinable())
      thread_.join();
  }

  size_t id() const noexcept {
    return id_;
  }

  policy_scheduler<Policy>* parent() const noexcept {
    return parent_;
  }

  typename Policy::worker_data data;

private:
  void run();

  size_t id_;
  policy_scheduler<Policy>* parent_;
  std::thread thread_;
};

/// Shape of a scheduling policy: pure data plus hook functions; not a
/// base class.
template <class P>
concept scheduler_policy = requires(P p, policy_scheduler<P>* coordinator,
                                    scheduler_worker<P>* worker,
                                    resumable* job) {
  typename P::coordinator_data;
  typename P::worker_data;
  p.central_enqueue(coordinator, job);
  p.external_enqueue(worker, job);
  p.internal_enqueue(worker, job);
  p.resume_job_later(worker, job);
  { p.dequeue(worker) } -> std::same_as<resumable*>;
  p.before_resume(worker, job);
  p.after_resume(worker, job);
  p.after_completion(worker, job);
};

template <class Policy>
class policy_scheduler : public scheduler {
public:
  explicit policy_scheduler(scheduler_config cfg) {
    config_ = cfg;
  }

  void start(actor_system* sys) override {
    system_ = sys;
    auto n = num_workers();
    stats_.init(n);
    workers_.reserve(n);
    std::mt19937_64 seeder{0x5EEDull};
    for (size_t i = 0; i < n; ++i)
      workers_.push_back(
        std::make_unique<scheduler_worker<Policy>>(i, this, seeder()));
    for (auto& w : workers_)
      w->start();
  }

  void stop() override {
    shutdown_.store(true, std::memory_order_release);
    for (auto& w : workers_)
      w->join();
    // Dispose anything that leaked into the queues past drain.
    for (auto& w : workers_)
      while (auto job = w->data.queue.pop_front())
        job->deref_job();
  }

  void schedule(resumable* job) override {
    auto& tls = detail::tls_sched;
    if (tls.owner == this) {
      auto w = static_cast<scheduler_worker<Policy>*>(tls.worker);
      policy_.internal_enqueue(w, job);
    } else {
      policy_.central_enqueue(this, job);
    }
  }

  bool shutting_down() const noexcept override {
    return shutdown_.load(std::memory_order_acquire);
  }

  scheduler_worker<Policy>& worker_at(size_t i) noexcept {
    return *workers_[i];
  }

  typename Policy::coordinator_data data;

  Policy& policy() noexcept {
    return policy_;
  }

  actor_system* system() const noexcept {
    return system_;
  }

private:
  friend class scheduler_worker<Policy>;

  Policy policy_;
  std::vector<std::unique_ptr<scheduler_worker<Policy>>> workers_;
  std::atomic<bool> shutdown_{false};
  actor_system* system_ = nullptr;
};

template <class Policy>
void scheduler_worker<Policy>::run() {
  detail::tls_sched = {parent_, this};
  auto& policy = parent_->policy();
  auto max_msgs = parent_->max_msgs();
  for (;;) {
    auto job = policy.dequeue(this);
    if (job == nullptr)
      break; // shutdown
    policy.before_resume(this, job);
    auto result = job->resume(max_msgs);
    policy.after_resume(this, job);
    switch (result) {
      case resumable::resume_result::awaiting:
        job->deref_job();
        break;
      case resumable::resume_result::yielded:
        policy.resume_job_later(this, job);
        break;
      case resumable::resume_result::finished:
        policy.after_completion(this, job);
        job->deref_job();
        break;
    }
  }
  detail::tls_sched = {};
}

/// Default policy: per-worker deques with randomized stealing from the
/// back of a victim. New work from inside a worker goes to the local
/// front for cache locality; coordinator work round-robins across
/// workers.
class work_stealing {
public:
  struct coordinator_data {
    std::atomic<size_t> next_worker{0};
  };

  struct worker_data {
    explicit worker_data(uint64_t seed) : rng(seed) {
      // nop
    }

    worker_deque queue;
    std::mt19937_64 rng;
  };

  void central_enqueue(policy_scheduler<work_stealing>* self,
                       resumable* job) {
    auto n = self->data.next_worker.fetch_add(1, std::memory_order_relaxed);
    auto index = n % self->num_workers();
    self->stats().central_enqueues.fetch_add(1, std::memory_order_relaxed);
    self->stats().note_placement(index);
    external_enqueue(&self->worker_at(index), job);
  }

  void external_enqueue(scheduler_worker<work_stealing>* self,
                        resumable* job) {
    self->data.queue.push_back(job);
  }

  void internal_enqueue(scheduler_worker<work_stealing>* self,
                        resumable* job) {
    self->data.queue.push_front(job);
  }

  void resume_job_later(scheduler_worker<work_stealing>* self,
                        resumable* job) {
    external_enqueue(self, job);
  }

  resumable* dequeue(scheduler_worker<work_stealing>* self) {
    auto parent = self->parent();
    const auto& cfg = parent->config();
    size_t sweep = 0;
    for (;;) {
      if (auto job = self->data.queue.pop_front())
        return job;
      if (parent->shutting_down())
        return nullptr;
      // Become a thief: pick a random victim and raid the back of its
      // queue, rechecking the own queue between sweeps.
      auto n = parent->num_workers();
      if (n > 1) {
        auto victim = self->data.rng() % n;
        if (victim != self->id()) {
          if (auto job = parent->worker_at(victim).data.queue.pop_back()) {
            parent->stats().steals.fetch_add(1, std::memory_order_relaxed);
            return job;
          }
        }
      }
      ++sweep;
      if (sweep < cfg.steal_spin_sweeps)
        continue;
      if (sweep < cfg.steal_spin_sweeps + cfg.steal_yield_sweeps)
        std::this_thread::yield();
      else
        std::this_thread::sleep_for(cfg.steal_sleep);
    }
  }

  void before_resume(scheduler_worker<work_stealing>* self, resumable* job) {
    auto parent = self->parent();
    parent->stats().before_resumes.fetch_add(1, std::memory_order_relaxed);
    if (parent->hooks.before_resume)
      parent->hooks.before_resume(job);
  }

  void after_resume(scheduler_worker<work_stealing>* self, resumable* job) {
    auto parent = self->parent();
    parent->stats().after_resumes.fetch_add(1, std::memory_order_relaxed);
    if (parent->hooks.after_resume)
      parent->hooks.after_resume(job);
  }

  void after_completion(scheduler_worker<work_stealing>* self,
                        resumable* job) {
    auto parent = self->parent();
    parent->stats().completions.fetch_add(1, std::memory_order_relaxed);
    if (parent->hooks.after_completion)
      parent->hooks.after_completion(job);
  }
};

static_assert(scheduler_policy<work_stealing>);

} // namespace cafx

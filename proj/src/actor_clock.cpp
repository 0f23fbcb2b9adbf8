#include "cafx/actor_clock.hpp"

#include <utility>
#include <vector>

namespace cafx {

void actor_clock::schedule(time_point when, action what) {
  std::unique_lock guard{mtx_};
  if (stopping_)
    return;
  entries_.emplace(when, std::move(what));
  if (!running_) {
    running_ = true;
    thread_ = std::thread{[this] { run(); }};
  }
  cv_.notify_one();
}

void actor_clock::stop() {
  {
    std::unique_lock guard{mtx_};
    if (stopping_)
      return;
    stopping_ = true;
    cv_.notify_one();
  }
  if (thread_.joinable())
    thread_.join();
}

void actor_clock::run() {
  std::unique_lock guard{mtx_};
  while (!stopping_) {
    if (entries_.empty()) {
      cv_.wait(guard);
      continue;
    }
    auto next = entries_.begin()->first;
    if (clock_type::now() < next) {
      cv_.wait_until(guard, next);
      continue;
    }
    // Collect everything due and fire outside the lock.
    std::vector<action> due;
    auto now = clock_type::now();
    while (!entries_.empty() && entries_.begin()->first <= now) {
      due.push_back(std::move(entries_.begin()->second));
      entries_.erase(entries_.begin());
    }
    guard.unlock();
    for (auto& f : due)
      f();
    guard.lock();
  }
}

} // namespace cafx

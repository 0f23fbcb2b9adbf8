#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

namespace cafx {

/// One timer thread per runtime instance; fires scheduled actions (e.g.
/// request timeouts) without blocking any worker.
class actor_clock {
public:
  using clock_type = std::chrono::steady_clock;
  using time_point = clock_type::time_point;
  using action = std::function<void()>;

  actor_clock() = default;

  ~actor_clock() {
    stop();
  }

  void schedule(time_point when, action what);

  void stop();

private:
  void run();

  std::mutex mtx_;
  std::condition_variable cv_;
  std::multimap<time_point, action> entries_;
  std::thread thread_;
  bool running_ = false;
  bool stopping_ = false;
};

} // namespace cafx

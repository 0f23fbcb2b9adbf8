#include "cafx/bench/mem_sampler.hpp"

#include <cstdio>

#if defined(__unix__) || defined(__APPLE__)
#  include <unistd.h>
#endif

namespace cafx::bench {

std::optional<uint64_t> resident_set_bytes() {
#if defined(__linux__)
  // /proc/self/statm: size resident shared text lib data dt (pages)
  auto f = fopen("/proc/self/statm", "r");
  if (!f)
    return std::nullopt;
  unsigned long size = 0, resident = 0;
  auto n = fscanf(f, "%lu %lu", &size, &resident);
  fclose(f);
  if (n != 2)
    return std::nullopt;
  auto page = static_cast<uint64_t>(sysconf(_SC_PAGESIZE));
  return resident * page;
#else
  return std::nullopt;
#endif
}

void mem_sampler::start() {
  if (!resident_set_bytes())
    return; // no probe on this platform; sample series stays empty
  running_.store(true, std::memory_order_release);
  thread_ = std::thread{[this] {
    auto t0 = std::chrono::steady_clock::now();
    while (running_.load(std::memory_order_acquire)) {
      if (auto rss = resident_set_bytes()) {
        auto t = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
                   .count();
        samples_.emplace_back(static_cast<uint64_t>(t), *rss);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }};
}

std::vector<std::pair<uint64_t, uint64_t>> mem_sampler::stop() {
  if (thread_.joinable()) {
    running_.store(false, std::memory_order_release);
    thread_.join();
  }
  return std::move(samples_);
}

} // namespace cafx::bench

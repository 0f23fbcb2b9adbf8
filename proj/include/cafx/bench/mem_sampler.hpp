#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace cafx::bench {

/// Platform probe for the current resident set size; nullopt on platforms
/// without a known source (runs then record no samples).
std::optional<uint64_t> resident_set_bytes();

/// Samples the resident set every ~50 ms on a helper thread.
class mem_sampler {
public:
  mem_sampler() = default;

  ~mem_sampler() {
    stop();
  }

  void start();

  /// Stops sampling and returns (t_ms, rss_bytes) pairs.
  std::vector<std::pair<uint64_t, uint64_t>> stop();

private:
  std::thread thread_;
  std::atomic<bool> running_{false};
  std::vector<std::pair<uint64_t, uint64_t>> samples_;
};

} // namespace cafx::bench

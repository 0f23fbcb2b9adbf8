#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cafx/scheduler.hpp"

namespace cafx::bench {

/// Result of one benchmark run: wall clock, sampled memory and a
/// deterministic checksum over the computed result.
struct bench_report {
  std::string name;
  std::string params;
  double wall_clock_ms = 0;
  /// (milliseconds since start, resident set bytes), sampled every ~50 ms.
  std::vector<std::pair<uint64_t, uint64_t>> memory_samples;
  uint64_t peak_rss_bytes = 0;
  uint64_t checksum = 0;
};

struct bench_options {
  /// Worker threads; 0 picks environment overrides or the hardware
  /// concurrency.
  size_t workers = 0;
  size_t max_msgs = SIZE_MAX;

  scheduler_config to_scheduler_config() const {
    auto cfg = scheduler_config::from_env();
    if (workers > 0)
      cfg.num_workers = workers;
    if (max_msgs != SIZE_MAX)
      cfg.max_msgs = max_msgs;
    return cfg;
  }
};

/// Divide and conquer: each actor above level zero spawns two children
/// one level down and sums their replies; leaves reply one. The result is
/// 2^exponent and doubles as the checksum.
bench_report run_creation(uint32_t exponent, bench_options opts = {});

/// N:1 mailbox pressure: `senders` actors each fire `msgs_per_sender`
/// messages at one receiver; the checksum is the final receive count.
bench_report run_mailbox(uint32_t senders, uint64_t msgs_per_sender,
                         bench_options opts = {});

/// Whether the ring token loses one unit per full round or per hop.
enum class decrement_mode : uint8_t { per_round, per_hop };

/// Default numeric workload: the product of the nine-digit primes
/// 999999893 and 999999937.
inline constexpr uint64_t default_factor_target = 999999830000006741ull;

/// Multi-ring token passing with actor churn: every ring is re-created
/// `repetitions` times and one worker per ring incarnation factorizes
/// `factor_target`. The checksum XORs the total hop count with the sum of
/// the recomputed factor products.
bench_report run_mixed(uint32_t rings, uint32_t actors_per_ring,
                       uint32_t token_value, uint32_t repetitions,
                       uint64_t factor_target = default_factor_target,
                       decrement_mode mode = decrement_mode::per_round,
                       bench_options opts = {});

/// One actor per image row computes escape iteration counts over the area
/// [-1.5-i, 0.5+i]; the checksum is a 64-bit FNV-1a over the counts in
/// row-major order (big-endian cells), independent of scheduling.
bench_report run_mandelbrot(uint32_t size, uint32_t max_iter,
                            bench_options opts = {});

/// Prime factors of n in nondecreasing order (n >= 2).
std::vector<uint64_t> factorize(uint64_t n);

/// Escape iteration count for c = re + im*i, capped at max_iter.
uint32_t mandelbrot_cell(double re, double im, uint32_t max_iter);

/// Iteration counts of row y for an size x size grid.
std::vector<uint32_t> mandelbrot_row(uint32_t y, uint32_t size,
                                     uint32_t max_iter);

/// Appends one CSV row; creates the file with a header when missing.
/// Schema: benchmark,param_string,workers,run_index,wall_clock_ms,
/// peak_rss_bytes,checksum
void append_csv(const std::string& path, const bench_report& report,
                size_t workers, size_t run_index);

/// Writes the memory sample series to `<benchmark>.mem.csv` next to
/// `csv_path`, one `t_ms,rss_bytes` row per sample.
void write_mem_sidecar(const std::string& csv_path,
                       const bench_report& report);

} // namespace cafx::bench

// Benchmark harness: reproduces the four runtime experiments at
// configurable scale and reports wall clock, memory samples and result
// checksums as CSV.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cafx/bench/bench.hpp"

using namespace cafx;

namespace {

struct global_flags {
  size_t workers = 0;
  size_t max_msgs = 0;
  size_t runs = 10;
  std::string csv;
};

bench::bench_options options_of(const global_flags& flags) {
  bench::bench_options opts;
  opts.workers = flags.workers;
  if (flags.max_msgs > 0)
    opts.max_msgs = flags.max_msgs;
  return opts;
}

void report_runs(const global_flags& flags,
                 const std::function<bench::bench_report()>& one_run) {
  double total_ms = 0;
  uint64_t peak = 0;
  uint64_t checksum = 0;
  auto opts = options_of(flags);
  auto workers = opts.to_scheduler_config().effective_workers();
  for (size_t i = 0; i < flags.runs; ++i) {
    auto report = one_run();
    total_ms += report.wall_clock_ms;
    peak = std::max(peak, report.peak_rss_bytes);
    checksum = report.checksum;
    if (!flags.csv.empty()) {
      bench::append_csv(flags.csv, report, workers, i);
      bench::write_mem_sidecar(flags.csv, report);
    }
    printf("%s[%s] run %zu/%zu: %.2f ms, peak rss %.1f MB, checksum %llu\n",
           report.name.c_str(), report.params.c_str(), i + 1, flags.runs,
           report.wall_clock_ms,
           static_cast<double>(report.peak_rss_bytes) / (1024.0 * 1024.0),
           static_cast<unsigned long long>(report.checksum));
    fflush(stdout);
  }
  printf("average over %zu runs: %.2f ms (workers=%zu, checksum %llu)\n",
         flags.runs, total_ms / static_cast<double>(flags.runs), workers,
         static_cast<unsigned long long>(checksum));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"actor runtime benchmark harness"};
  app.require_subcommand(1);
  app.fallthrough();

  global_flags flags;
  app.add_option("--workers", flags.workers,
                 "worker threads (0: environment or hardware)");
  app.add_option("--max-msgs", flags.max_msgs,
                 "messages per actor run (0: unlimited)");
  app.add_option("--runs", flags.runs, "repetitions to average")
    ->default_val(10);
  app.add_option("--csv", flags.csv, "append per-run rows to this file");

  // creation
  uint32_t exponent = 20;
  auto creation = app.add_subcommand("creation",
                                     "spawn a binary tree of 2^k actors");
  creation->add_option("--exp", exponent, "tree depth k")
    ->default_val(20)
    ->check(CLI::Range(0, 24));

  // mailbox
  uint32_t senders = 8;
  uint64_t msgs = 100'000;
  auto mailbox = app.add_subcommand("mailbox", "N:1 mailbox pressure");
  mailbox->add_option("--senders", senders, "sender actors")->default_val(8);
  mailbox->add_option("--msgs", msgs, "messages per sender")
    ->default_val(100'000);

  // mixed
  uint32_t rings = 100;
  uint32_t ring_size = 100;
  uint32_t token = 1000;
  uint32_t reps = 4;
  uint64_t factor = bench::default_factor_target;
  std::string decrement = "round";
  auto mixed = app.add_subcommand("mixed",
                                  "token rings with factorization load");
  mixed->add_option("--rings", rings, "number of rings")->default_val(100);
  mixed->add_option("--ring-size", ring_size, "actors per ring")
    ->default_val(100);
  mixed->add_option("--token", token, "initial token value")
    ->default_val(1000);
  mixed->add_option("--reps", reps, "ring re-creations")->default_val(4);
  mixed->add_option("--factor", factor, "factorization target")
    ->default_val(bench::default_factor_target);
  mixed->add_option("--decrement", decrement, "token decrement: round|hop")
    ->default_val("round")
    ->check(CLI::IsMember({"round", "hop"}));

  // mandelbrot
  uint32_t size = 16000;
  uint32_t iter = 500;
  auto mandelbrot = app.add_subcommand("mandelbrot",
                                       "escape counts, one actor per row");
  mandelbrot->add_option("--size", size, "grid size N")->default_val(16000);
  mandelbrot->add_option("--iter", iter, "iteration maximum")
    ->default_val(500);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*creation) {
      report_runs(flags, [&] {
        return bench::run_creation(exponent, options_of(flags));
      });
    } else if (*mailbox) {
      report_runs(flags, [&] {
        return bench::run_mailbox(senders, msgs, options_of(flags));
      });
    } else if (*mixed) {
      auto mode = decrement == "hop" ? bench::decrement_mode::per_hop
                                     : bench::decrement_mode::per_round;
      report_runs(flags, [&] {
        return bench::run_mixed(rings, ring_size, token, reps, factor, mode,
                                options_of(flags));
      });
    } else if (*mandelbrot) {
      report_runs(flags, [&] {
        return bench::run_mandelbrot(size, iter, options_of(flags));
      });
    }
  } catch (const failure& err) {
    fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}

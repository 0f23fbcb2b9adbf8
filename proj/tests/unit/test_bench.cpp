#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

#include "cafx/bench/bench.hpp"
#include "cafx/bench/mem_sampler.hpp"

using namespace cafx;

namespace {

/// Sequential reference for the mandelbrot checksum; escape loop and hash
/// written out independently of the benchmark implementation.
uint64_t reference_mandelbrot_checksum(uint32_t n, uint32_t max_iter) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](uint8_t byte) { h = (h ^ byte) * 0x100000001b3ull; };
  for (uint32_t y = 0; y < n; ++y) {
    for (uint32_t x = 0; x < n; ++x) {
      double cr = 2.0 * x / n - 1.5;
      double ci = 2.0 * y / n - 1.0;
      double zr = 0.0;
      double zi = 0.0;
      uint32_t count = max_iter;
      for (uint32_t i = 1; i <= max_iter; ++i) {
        double tmp = zr * zr - zi * zi + cr;
        zi = 2.0 * zr * zi + ci;
        zr = tmp;
        if (zr * zr + zi * zi > 4.0) {
          count = i;
          break;
        }
      }
      feed(static_cast<uint8_t>(count >> 24));
      feed(static_cast<uint8_t>(count >> 16));
      feed(static_cast<uint8_t>(count >> 8));
      feed(static_cast<uint8_t>(count));
    }
  }
  return h;
}

bench::bench_options workers(size_t n) {
  bench::bench_options opts;
  opts.workers = n;
  return opts;
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("factorize") {
  CHECK(bench::factorize(15) == std::vector<uint64_t>{3, 5});
  CHECK(bench::factorize(16) == std::vector<uint64_t>{2, 2, 2, 2});
  CHECK(bench::factorize(2) == std::vector<uint64_t>{2});
  CHECK(bench::factorize(999999937) == std::vector<uint64_t>{999999937});
  auto factors = bench::factorize(3 * 5 * 7 * 11);
  CHECK(factors == std::vector<uint64_t>{3, 5, 7, 11});
  uint64_t product = 1;
  for (auto f : bench::factorize(360))
    product *= f;
  CHECK(product == 360);
}

TEST_CASE("default workload round-trips through its prime factors") {
  auto factors = bench::factorize(bench::default_factor_target);
  REQUIRE(factors.size() == 2);
  CHECK(factors[0] == 999999893);
  CHECK(factors[1] == 999999937);
  CHECK(factors[0] * factors[1] == bench::default_factor_target);
}

TEST_CASE("mandelbrot cells") {
  // the origin never escapes
  CHECK(bench::mandelbrot_cell(0.0, 0.0, 50) == 50);
  CHECK(bench::mandelbrot_cell(0.0, 0.0, 500) == 500);
  // c = 2: z1 = 2 stays inside (|z|^2 == 4), z2 = 6 escapes
  CHECK(bench::mandelbrot_cell(2.0, 0.0, 50) == 2);
}

TEST_CASE("creation bench computes powers of two") {
  CHECK(bench::run_creation(0, workers(2)).checksum == 1);
  CHECK(bench::run_creation(10, workers(2)).checksum == 1024);
  auto report = bench::run_creation(12, workers(2));
  CHECK(report.checksum == 4096);
  CHECK(report.wall_clock_ms > 0);
}

TEST_CASE("mailbox bench counts every envelope") {
  CHECK(bench::run_mailbox(1, 1, workers(2)).checksum == 1);
  CHECK(bench::run_mailbox(8, 1000, workers(2)).checksum == 8000);
}

TEST_CASE("mixed bench hop accounting") {
  // one ring of four actors, token 2, one repetition: 2 rounds x 4 hops
  auto report = bench::run_mixed(1, 4, 2, 1, 15,
                                 bench::decrement_mode::per_round,
                                 workers(2));
  uint64_t hops = 8;
  uint64_t products = 15;
  CHECK(report.checksum == (hops ^ products));

  // hop-wise decrement: the token dies after `token` hops
  auto hopwise = bench::run_mixed(1, 4, 5, 1, 15,
                                  bench::decrement_mode::per_hop,
                                  workers(2));
  CHECK(hopwise.checksum == (uint64_t{5} ^ uint64_t{15}));

  // multiple rings and repetitions accumulate deterministically
  auto multi = bench::run_mixed(3, 2, 4, 2, 21,
                                bench::decrement_mode::per_round,
                                workers(2));
  uint64_t multi_hops = 3ull * 2 * 4 * 2;
  uint64_t multi_products = 3ull * 2 * 21;
  CHECK(multi.checksum == (multi_hops ^ multi_products));

  // a single-member ring degenerates to token-value rounds
  auto tiny = bench::run_mixed(1, 1, 3, 1, 4,
                               bench::decrement_mode::per_round,
                               workers(1));
  CHECK(tiny.checksum == (uint64_t{3} ^ uint64_t{4}));
}

TEST_CASE("mandelbrot bench matches the sequential reference") {
  auto expected = reference_mandelbrot_checksum(64, 50);
  auto report = bench::run_mandelbrot(64, 50, workers(2));
  CHECK(report.checksum == expected);
}

TEST_CASE("checksums are invariant under the worker count") {
  auto c1 = bench::run_mandelbrot(96, 60, workers(1)).checksum;
  auto c2 = bench::run_mandelbrot(96, 60, workers(2)).checksum;
  auto c4 = bench::run_mandelbrot(96, 60, workers(4)).checksum;
  CHECK(c1 == c2);
  CHECK(c2 == c4);
  auto m1 = bench::run_mixed(2, 3, 5, 2, 1001,
                             bench::decrement_mode::per_round, workers(1))
              .checksum;
  auto m4 = bench::run_mixed(2, 3, 5, 2, 1001,
                             bench::decrement_mode::per_round, workers(4))
              .checksum;
  CHECK(m1 == m4);
}

TEST_CASE("memory probe reports plausible values on this platform") {
  auto rss = bench::resident_set_bytes();
  if (rss) {
    CHECK(*rss > 1024 * 1024);
  }
  auto report = bench::run_creation(8, workers(2));
  if (rss)
    CHECK(report.peak_rss_bytes > 0);
}

TEST_CASE("csv reporting") {
  auto path = std::string{"/tmp/cafx_bench_test.csv"};
  std::remove(path.c_str());
  auto report = bench::run_creation(4, workers(1));
  bench::append_csv(path, report, 1, 0);
  bench::append_csv(path, report, 1, 1);
  bench::write_mem_sidecar(path, report);
  std::ifstream in{path};
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "benchmark,param_string,workers,run_index,wall_clock_ms,"
                  "peak_rss_bytes,checksum");
  CHECK(row1.find("creation,exp=4,1,0,") == 0);
  CHECK(row2.find("creation,exp=4,1,1,") == 0);
  std::remove(path.c_str());
  std::remove("/tmp/creation.mem.csv");
}

} // TEST_SUITE

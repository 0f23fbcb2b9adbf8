#include "cafx/bench/bench.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "cafx/actor_system.hpp"
#include "cafx/bench/mem_sampler.hpp"
#include "cafx/detail/fnv.hpp"
#include "cafx/scoped_actor.hpp"

namespace cafx::bench {

namespace {

using namespace std::chrono;
using namespace std::chrono_literals;

using tok_atom = atom_constant<atom("tok")>;
using stop_atom = atom_constant<atom("stop")>;
using next_atom = atom_constant<atom("next")>;
using done_atom = atom_constant<atom("done")>;
using fact_atom = atom_constant<atom("fact")>;

constexpr auto bench_timeout = 10min;

double ms_since(steady_clock::time_point t0) {
  return duration<double, std::milli>(steady_clock::now() - t0).count();
}

uint64_t peak_of(const std::vector<std::pair<uint64_t, uint64_t>>& samples) {
  uint64_t peak = 0;
  for (const auto& [t, rss] : samples)
    peak = std::max(peak, rss);
  return peak;
}

// -- actor creation ------------------------------------------------------------

class tree_node : public event_based_actor {
public:
  tree_node(actor_config cfg, actor parent, uint32_t level)
    : event_based_actor(cfg), parent_(std::move(parent)), level_(level) {
    // nop
  }

  behavior make_behavior() override {
    if (level_ == 0) {
      send(parent_, make_message(uint64_t{1}));
      quit();
      return {};
    }
    auto self_handle = actor{abstract_actor_ptr{this}};
    home_system().spawn<tree_node>(self_handle, level_ - 1);
    home_system().spawn<tree_node>(self_handle, level_ - 1);
    return {
      [this](uint64_t partial) {
        acc_ += partial;
        if (--pending_ == 0) {
          send(parent_, make_message(acc_));
          quit();
        }
      },
    };
  }

private:
  actor parent_;
  uint32_t level_;
  uint64_t acc_ = 0;
  int pending_ = 2;
};

// -- mailbox pressure -----------------------------------------------------------

class mailbox_receiver : public event_based_actor {
public:
  mailbox_receiver(actor_config cfg, actor report_to, uint64_t expected)
    : event_based_actor(cfg),
      report_to_(std::move(report_to)),
      expected_(expected) {
    // nop
  }

  behavior make_behavior() override {
    if (expected_ == 0) {
      send(report_to_, make_message(uint64_t{0}));
      quit();
      return {};
    }
    return {
      [this](uint64_t) {
        if (++count_ == expected_) {
          send(report_to_, make_message(count_));
          quit();
        }
      },
    };
  }

private:
  actor report_to_;
  uint64_t expected_;
  uint64_t count_ = 0;
};

class mailbox_sender : public event_based_actor {
public:
  mailbox_sender(actor_config cfg, actor receiver, uint64_t count)
    : event_based_actor(cfg), receiver_(std::move(receiver)), count_(count) {
    // nop
  }

  behavior make_behavior() override {
    for (uint64_t i = 0; i < count_; ++i)
      send(receiver_, make_message(i));
    quit();
    return {};
  }

private:
  actor receiver_;
  uint64_t count_;
};

// -- mixed rings -----------------------------------------------------------------

class ring_member : public event_based_actor {
public:
  ring_member(actor_config cfg, actor slot, decrement_mode mode, bool head,
              actor next)
    : event_based_actor(cfg),
      slot_(std::move(slot)),
      mode_(mode),
      head_(head),
      next_(std::move(next)) {
    // nop
  }

  behavior make_behavior() override {
    return {
      [this](next_atom, actor_addr next) {
        next_ = actor{home_system().resolve(next)};
      },
      [this](tok_atom, uint32_t value, uint64_t hops) {
        on_token(value, hops);
      },
      [this](stop_atom, uint64_t hops) {
        send(next_, make_message(stop_atom::value, hops));
        quit();
      },
    };
  }

private:
  void on_token(uint32_t value, uint64_t hops) {
    if (mode_ == decrement_mode::per_round) {
      if (head_ && hops > 0) {
        // the token finished one round when it returns to the head
        --value;
        if (value == 0) {
          finish(hops);
          return;
        }
      }
      send(next_, make_message(tok_atom::value, value, hops + 1));
    } else {
      if (value == 0) {
        finish(hops);
        return;
      }
      send(next_, make_message(tok_atom::value, value - 1, hops + 1));
    }
  }

  void finish(uint64_t hops) {
    send(slot_, make_message(done_atom::value, hops));
    send(next_, make_message(stop_atom::value, hops));
    quit();
  }

  actor slot_;
  decrement_mode mode_;
  bool head_;
  actor next_;
};

class factor_worker : public event_based_actor {
public:
  factor_worker(actor_config cfg, actor slot, uint64_t target)
    : event_based_actor(cfg), slot_(std::move(slot)), target_(target) {
    // nop
  }

  behavior make_behavior() override {
    uint64_t product = 1;
    for (auto f : factorize(target_))
      product *= f;
    send(slot_, make_message(fact_atom::value, product));
    quit();
    return {};
  }

private:
  actor slot_;
  uint64_t target_;
};

/// Runs `repetitions` incarnations of one ring, re-creating the actors
/// each time, and reports accumulated hops and factor products.
class ring_slot : public event_based_actor {
public:
  ring_slot(actor_config cfg, actor collector, uint32_t actors,
            uint32_t token, uint32_t repetitions, uint64_t factor_target,
            decrement_mode mode)
    : event_based_actor(cfg),
      collector_(std::move(collector)),
      actors_(actors),
      token_(token),
      repetitions_(repetitions),
      factor_target_(factor_target),
      mode_(mode) {
    // nop
  }

  behavior make_behavior() override {
    start_incarnation();
    return {
      [this](done_atom, uint64_t hops) {
        hops_total_ += hops;
        ring_done_ = true;
        maybe_advance();
      },
      [this](fact_atom, uint64_t product) {
        product_sum_ += product;
        worker_done_ = true;
        maybe_advance();
      },
    };
  }

private:
  void start_incarnation() {
    auto self_handle = actor{abstract_actor_ptr{this}};
    auto& sys = home_system();
    auto head
      = sys.spawn<ring_member>(self_handle, mode_, true, actor{});
    auto next = head;
    for (uint32_t i = 1; i < actors_; ++i)
      next = sys.spawn<ring_member>(self_handle, mode_, false, next);
    send(head, make_message(next_atom::value, next.address()));
    send(head, make_message(tok_atom::value, token_, uint64_t{0}));
    sys.spawn<factor_worker>(self_handle, factor_target_);
  }

  void maybe_advance() {
    if (!ring_done_ || !worker_done_)
      return;
    if (++completed_ == repetitions_) {
      send(collector_, make_message(hops_total_, product_sum_));
      quit();
      return;
    }
    ring_done_ = worker_done_ = false;
    start_incarnation();
  }

  actor collector_;
  uint32_t actors_;
  uint32_t token_;
  uint32_t repetitions_;
  uint64_t factor_target_;
  decrement_mode mode_;
  uint32_t completed_ = 0;
  bool ring_done_ = false;
  bool worker_done_ = false;
  uint64_t hops_total_ = 0;
  uint64_t product_sum_ = 0;
};

// -- mandelbrot -------------------------------------------------------------------

byte_buffer pack_row(const std::vector<uint32_t>& counts) {
  byte_buffer bytes;
  bytes.reserve(counts.size() * 4);
  for (auto c : counts)
    detail::put_u32(bytes, c);
  return bytes;
}

class row_worker : public event_based_actor {
public:
  row_worker(actor_config cfg, actor collector, uint32_t y, uint32_t size,
             uint32_t max_iter)
    : event_based_actor(cfg),
      collector_(std::move(collector)),
      y_(y),
      size_(size),
      max_iter_(max_iter) {
    // nop
  }

  behavior make_behavior() override {
    send(collector_, make_message(y_, pack_row(mandelbrot_row(y_, size_,
                                                              max_iter_))));
    quit();
    return {};
  }

private:
  actor collector_;
  uint32_t y_;
  uint32_t size_;
  uint32_t max_iter_;
};

class mandel_collector : public event_based_actor {
public:
  mandel_collector(actor_config cfg, actor report_to, uint32_t size)
    : event_based_actor(cfg), report_to_(std::move(report_to)), size_(size) {
    rows_.resize(size);
  }

  behavior make_behavior() override {
    return {
      [this](uint32_t y, const byte_buffer& row) {
        rows_[y] = row;
        if (++received_ == size_) {
          auto h = detail::fnv1a_seed;
          for (const auto& r : rows_)
            h = detail::fnv1a(r.data(), r.size(), h);
          send(report_to_, make_message(h));
          quit();
        }
      },
    };
  }

private:
  actor report_to_;
  uint32_t size_;
  uint32_t received_ = 0;
  std::vector<byte_buffer> rows_;
};

} // namespace

// -- public operations ---------------------------------------------------------------

std::vector<uint64_t> factorize(uint64_t n) {
  std::vector<uint64_t> factors;
  while (n % 2 == 0) {
    factors.push_back(2);
    n /= 2;
  }
  for (uint64_t d = 3; d * d <= n; d += 2) {
    while (n % d == 0) {
      factors.push_back(d);
      n /= d;
    }
  }
  if (n > 1)
    factors.push_back(n);
  return factors;
}

uint32_t mandelbrot_cell(double re, double im, uint32_t max_iter) {
  double zr = 0;
  double zi = 0;
  for (uint32_t i = 1; i <= max_iter; ++i) {
    auto nr = zr * zr - zi * zi + re;
    auto ni = 2 * zr * zi + im;
    zr = nr;
    zi = ni;
    if (zr * zr + zi * zi > 4.0)
      return i;
  }
  return max_iter;
}

std::vector<uint32_t> mandelbrot_row(uint32_t y, uint32_t size,
                                     uint32_t max_iter) {
  std::vector<uint32_t> counts(size);
  auto ci = 2.0 * y / size - 1.0;
  for (uint32_t x = 0; x < size; ++x) {
    auto cr = 2.0 * x / size - 1.5;
    counts[x] = mandelbrot_cell(cr, ci, max_iter);
  }
  return counts;
}

// -- benchmark drivers -----------------------------------------------------------------

bench_report run_creation(uint32_t exponent, bench_options opts) {
  bench_report report;
  report.name = "creation";
  report.params = "exp=" + std::to_string(exponent);
  mem_sampler sampler;
  sampler.start();
  auto t0 = steady_clock::now();
  {
    actor_system sys{opts.to_scheduler_config()};
    scoped_actor root{sys};
    sys.spawn<tree_node>(root.handle(), exponent);
    root->receive(behavior{[&report](uint64_t total) {
                    report.checksum = total;
                  }},
                  bench_timeout);
    report.wall_clock_ms = ms_since(t0);
  }
  report.memory_samples = sampler.stop();
  report.peak_rss_bytes = peak_of(report.memory_samples);
  return report;
}

bench_report run_mailbox(uint32_t senders, uint64_t msgs_per_sender,
                         bench_options opts) {
  bench_report report;
  report.name = "mailbox";
  report.params = "senders=" + std::to_string(senders)
                  + ";msgs=" + std::to_string(msgs_per_sender);
  mem_sampler sampler;
  sampler.start();
  auto t0 = steady_clock::now();
  {
    actor_system sys{opts.to_scheduler_config()};
    scoped_actor root{sys};
    auto receiver = sys.spawn<mailbox_receiver>(
      root.handle(), uint64_t{senders} * msgs_per_sender);
    for (uint32_t s = 0; s < senders; ++s)
      sys.spawn<mailbox_sender>(receiver, msgs_per_sender);
    root->receive(behavior{[&report](uint64_t total) {
                    report.checksum = total;
                  }},
                  bench_timeout);
    report.wall_clock_ms = ms_since(t0);
  }
  report.memory_samples = sampler.stop();
  report.peak_rss_bytes = peak_of(report.memory_samples);
  return report;
}

bench_report run_mixed(uint32_t rings, uint32_t actors_per_ring,
                       uint32_t token_value, uint32_t repetitions,
                       uint64_t factor_target, decrement_mode mode,
                       bench_options opts) {
  bench_report report;
  report.name = "mixed";
  report.params = "rings=" + std::to_string(rings)
                  + ";size=" + std::to_string(actors_per_ring)
                  + ";token=" + std::to_string(token_value)
                  + ";reps=" + std::to_string(repetitions)
                  + ";factor=" + std::to_string(factor_target)
                  + (mode == decrement_mode::per_round ? ";dec=round"
                                                       : ";dec=hop");
  mem_sampler sampler;
  sampler.start();
  auto t0 = steady_clock::now();
  uint64_t hops_total = 0;
  uint64_t product_sum = 0;
  {
    actor_system sys{opts.to_scheduler_config()};
    scoped_actor root{sys};
    for (uint32_t r = 0; r < rings; ++r)
      sys.spawn<ring_slot>(root.handle(), actors_per_ring, token_value,
                           repetitions, factor_target, mode);
    for (uint32_t r = 0; r < rings; ++r)
      root->receive(behavior{[&](uint64_t hops, uint64_t products) {
                      hops_total += hops;
                      product_sum += products;
                    }},
                    bench_timeout);
    report.wall_clock_ms = ms_since(t0);
  }
  report.checksum = hops_total ^ product_sum;
  report.memory_samples = sampler.stop();
  report.peak_rss_bytes = peak_of(report.memory_samples);
  return report;
}

bench_report run_mandelbrot(uint32_t size, uint32_t max_iter,
                            bench_options opts) {
  bench_report report;
  report.name = "mandelbrot";
  report.params = "size=" + std::to_string(size)
                  + ";iter=" + std::to_string(max_iter);
  mem_sampler sampler;
  sampler.start();
  auto t0 = steady_clock::now();
  {
    actor_system sys{opts.to_scheduler_config()};
    scoped_actor root{sys};
    auto collector = sys.spawn<mandel_collector>(root.handle(), size);
    for (uint32_t y = 0; y < size; ++y)
      sys.spawn<row_worker>(collector, y, size, max_iter);
    root->receive(behavior{[&report](uint64_t checksum) {
                    report.checksum = checksum;
                  }},
                  bench_timeout);
    report.wall_clock_ms = ms_since(t0);
  }
  report.memory_samples = sampler.stop();
  report.peak_rss_bytes = peak_of(report.memory_samples);
  return report;
}

// -- reporting ----------------------------------------------------------------------------

void append_csv(const std::string& path, const bench_report& report,
                size_t workers, size_t run_index) {
  auto exists = std::filesystem::exists(path);
  std::ofstream out{path, std::ios::app};
  if (!out)
    throw failure{errc::config_error, "cannot open csv file: " + path};
  if (!exists)
    out << "benchmark,param_string,workers,run_index,wall_clock_ms,"
           "peak_rss_bytes,checksum\n";
  out << report.name << ',' << report.params << ',' << workers << ','
      << run_index << ',' << report.wall_clock_ms << ','
      << report.peak_rss_bytes << ',' << report.checksum << '\n';
}

void write_mem_sidecar(const std::string& csv_path,
                       const bench_report& report) {
  auto dir = std::filesystem::path{csv_path}.parent_path();
  auto sidecar = dir / (report.name + ".mem.csv");
  std::ofstream out{sidecar, std::ios::trunc};
  if (!out)
    return;
  out << "t_ms,rss_bytes\n";
  for (const auto& [t, rss] : report.memory_samples)
    out << t << ',' << rss << '\n';
}

} // namespace cafx::bench

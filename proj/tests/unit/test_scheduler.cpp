#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "cafx/actor_system.hpp"
#include "cafx/scoped_actor.hpp"

using namespace cafx;
using namespace std::chrono_literals;

TEST_SUITE("scheduler") {

TEST_CASE("worker deques serve the owner from the front") {
  worker_deque q;
  resumable* a = reinterpret_cast<resumable*>(0x10);
  resumable* b = reinterpret_cast<resumable*>(0x20);
  resumable* c = reinterpret_cast<resumable*>(0x30);
  q.push_back(a);
  q.push_back(b);
  CHECK(q.pop_front() == a);
  CHECK(q.size() == 1);
  q.push_front(c);
  // thieves raid the back
  CHECK(q.pop_back() == b);
  CHECK(q.pop_front() == c);
  CHECK(q.pop_front() == nullptr);
  CHECK(q.pop_back() == nullptr);
}

TEST_CASE("configuration defaults and environment overrides") {
  scheduler_config cfg;
  CHECK(cfg.effective_workers() == std::thread::hardware_concurrency());
  CHECK(cfg.max_msgs == SIZE_MAX);
  setenv("CAFX_WORKERS", "3", 1);
  setenv("CAFX_MAX_MSGS", "7", 1);
  auto from_env = scheduler_config::from_env();
  CHECK(from_env.num_workers == 3);
  CHECK(from_env.max_msgs == 7);
  unsetenv("CAFX_WORKERS");
  unsetenv("CAFX_MAX_MSGS");
  auto plain = scheduler_config::from_env();
  CHECK(plain.num_workers == 0);
  CHECK(plain.max_msgs == SIZE_MAX);
}

TEST_CASE("reconfiguring a started scheduler fails") {
  actor_system sys{scheduler_config{}};
  scheduler_config other;
  other.num_workers = 1;
  CHECK_NOTHROW(sys.set_scheduler(other));
  CHECK(sys.sched().num_workers() == 1);
  sys.spawn([] {}); // starts the workers
  CHECK_THROWS_AS(sys.set_scheduler(other), failure);
  CHECK_THROWS_AS(sys.set_scheduler_hooks(scheduler_hooks{}), failure);
}

TEST_CASE("a single worker still completes programs") {
  scheduler_config cfg;
  cfg.num_workers = 1;
  actor_system sys{cfg};
  scoped_actor self{sys};
  auto root = self.handle();
  auto pong = sys.spawn([]() -> behavior {
    return {[](atom_value) { return atom("pong"); }};
  });
  auto reply = self->request(pong, make_message(atom("ping")), 5s);
  REQUIRE(std::holds_alternative<message>(reply));
  CHECK(std::get<message>(reply).get<atom_value>(0) == atom("pong"));
}

TEST_CASE("top-level spawns round-robin across workers") {
  scheduler_config cfg;
  cfg.num_workers = 4;
  actor_system sys{cfg};
  for (int i = 0; i < 8; ++i)
    sys.spawn([] {}); // spawn-and-terminate jobs from a non-actor context
  sys.await_all_actors_done();
  auto placements = sys.sched().stats().placements();
  REQUIRE(placements.size() == 4);
  for (auto count : placements)
    CHECK(count == 2);
  CHECK(sys.sched().stats().central_enqueues.load() == 8);
}

TEST_CASE("max_msgs=1 resumes once per message") {
  scheduler_config cfg;
  cfg.num_workers = 1;
  cfg.max_msgs = 1;
  actor_system sys{cfg};
  scoped_actor self{sys};
  auto root = self.handle();
  auto counter = sys.spawn([root](event_based_actor* me) -> behavior {
    return {
      [me, root](int32_t value) {
        if (value < 0)
          me->send(root, make_message(atom("done")));
      },
    };
  });
  auto& stats = sys.sched().stats();
  auto settle = [&] {
    // wait until no resume is in flight anymore
    for (;;) {
      auto b = stats.before_resumes.load();
      auto a = stats.after_resumes.load();
      if (b == a) {
        std::this_thread::sleep_for(5ms);
        if (stats.before_resumes.load() == b)
          return a;
      }
      std::this_thread::sleep_for(1ms);
    }
  };
  sys.anon_send(counter, make_message(int32_t{-1}));
  REQUIRE(self->receive(behavior{[](atom_value) {}}, 5s));
  auto baseline = settle();
  for (int32_t i = 0; i < 3; ++i)
    sys.anon_send(counter, make_message(i));
  sys.anon_send(counter, make_message(int32_t{-2}));
  REQUIRE(self->receive(behavior{[](atom_value) {}}, 5s));
  auto resumed = settle() - baseline;
  CHECK(resumed == 4); // one resume per consumed message
  CHECK(stats.before_resumes.load() == stats.after_resumes.load());
}

TEST_CASE("hook accounting balances") {
  scheduler_config cfg;
  cfg.num_workers = 2;
  std::atomic<uint64_t> before{0}, after{0}, completed{0};
  actor_system sys{cfg};
  scheduler_hooks hooks;
  hooks.before_resume = [&](resumable*) { ++before; };
  hooks.after_resume = [&](resumable*) { ++after; };
  hooks.after_completion = [&](resumable*) { ++completed; };
  sys.set_scheduler_hooks(std::move(hooks));
  constexpr int num_actors = 50;
  std::vector<actor> spawned;
  for (int i = 0; i < num_actors; ++i)
    spawned.push_back(sys.spawn([](event_based_actor* me) -> behavior {
      return {[me](int32_t v) {
        if (v == 0)
          me->quit();
      }};
    }));
  for (auto& a : spawned)
    sys.anon_send(a, make_message(int32_t{0}));
  sys.await_all_actors_done();
  CHECK(before.load() == after.load());
  CHECK(completed.load() == num_actors);
  CHECK(sys.sched().stats().completions.load() == num_actors);
}

TEST_CASE("idle workers steal from loaded victims") {
  scheduler_config cfg;
  cfg.num_workers = 4;
  actor_system sys{cfg};
  std::atomic<int> done{0};
  constexpr int num_children = 1000;
  // One parent spawns all children from inside a worker; they land on
  // that worker's deque and must migrate via stealing.
  sys.spawn([&done](event_based_actor* me) {
    for (int i = 0; i < num_children; ++i) {
      me->home_system().spawn([&done]() -> behavior {
        volatile uint64_t sink = 0;
        for (int k = 0; k < 20'000; ++k)
          sink = sink + k;
        done.fetch_add(1, std::memory_order_relaxed);
        return {};
      });
    }
    me->quit();
  });
  sys.await_all_actors_done();
  CHECK(done.load() == num_children);
  CHECK(sys.sched().stats().steals.load() > 0);
}

TEST_CASE("work conservation under load") {
  scheduler_config cfg;
  cfg.num_workers = 4;
  actor_system sys{cfg};
  std::atomic<int> completed{0};
  constexpr int num_jobs = 10'000;
  for (int i = 0; i < num_jobs; ++i)
    sys.spawn([&completed] { completed.fetch_add(1); });
  sys.await_all_actors_done();
  CHECK(completed.load() == num_jobs);
}

} // TEST_SUITE

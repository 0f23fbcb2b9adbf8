#include <doctest.h>

#include <atomic>
#include <chrono>
#include <semaphore>
#include <thread>

#include "cafx/actor_system.hpp"
#include "cafx/atoms.hpp"
#include "cafx/scoped_actor.hpp"

using namespace cafx;
using namespace std::chrono_literals;

namespace {

using plus_atom = atom_constant<atom("plus")>;
using minus_atom = atom_constant<atom("minus")>;
using result_atom = atom_constant<atom("result")>;

behavior math_impl() {
  return {
    [](plus_atom, int32_t a, int32_t b) {
      return std::make_tuple(result_atom::value, a + b);
    },
    [](minus_atom, int32_t a, int32_t b) {
      return std::make_tuple(result_atom::value, a - b);
    },
  };
}

messaging_interface math_interface() {
  auto i32 = type_spec::of(builtin::i32);
  return {
    {{type_spec::atom_const(atom("plus")), i32, i32},
     {type_spec::atom_const(atom("result")), i32},
     std::nullopt},
    {{type_spec::atom_const(atom("minus")), i32, i32},
     {type_spec::atom_const(atom("result")), i32},
     std::nullopt},
  };
}

scheduler_config small_sched() {
  scheduler_config cfg;
  cfg.num_workers = 2;
  return cfg;
}

} // namespace

TEST_SUITE("runtime") {

TEST_CASE("typed math actor answers requests") {
  actor_system sys{small_sched()};
  auto math = sys.spawn_typed(math_interface(), math_impl);
  scoped_actor self{sys};
  auto reply = self->request(math, make_message(plus_atom::value, 10, 20), 5s);
  REQUIRE(std::holds_alternative<message>(reply));
  auto& msg = std::get<message>(reply);
  CHECK(msg.get<atom_value>(0) == atom("result"));
  CHECK(msg.get<int32_t>(1) == 30);

  auto reply2 = self->request(math, make_message(minus_atom::value, 10, 20),
                              5s);
  REQUIRE(std::holds_alternative<message>(reply2));
  CHECK(std::get<message>(reply2).get<int32_t>(1) == -10);
}

TEST_CASE("typed sends reject mismatched signatures before enqueue") {
  actor_system sys{small_sched()};
  auto math = sys.spawn_typed(math_interface(), math_impl);
  CHECK_THROWS_AS(sys.anon_send(math, make_message(atom("times"), 1, 2)),
                  failure);
  CHECK_THROWS_AS(sys.anon_send(math, make_message(plus_atom::value, 1.0)),
                  failure);
  try {
    sys.anon_send(math, make_message(atom("times"), 1, 2));
  } catch (const failure& err) {
    CHECK(err.code() == errc::type_mismatch);
  }
  // a narrowed handle rejects rules it no longer carries
  messaging_interface one_rule{math_interface().rules()[0]};
  auto narrowed = narrow(math, one_rule);
  auto inside_head = one_rule.rules()[0].inputs[0].constant;
  auto outside_head = inside_head == atom("plus") ? atom("minus")
                                                  : atom("plus");
  CHECK_NOTHROW(sys.anon_send(narrowed, make_message(inside_head, 1, 2)));
  CHECK_THROWS_AS(sys.anon_send(narrowed, make_message(outside_head, 1, 2)),
                  failure);
}

TEST_CASE("typed spawn validates the declared interface") {
  actor_system sys{small_sched()};
  SUBCASE("catch-all behaviors are rejected") {
    CHECK_THROWS_AS(sys.spawn_typed(math_interface(),
                                    []() -> behavior {
                                      return {
                                        [](plus_atom, int32_t, int32_t) {},
                                        others >> [] {},
                                      };
                                    }),
                    failure);
  }
  SUBCASE("missing rules are rejected") {
    try {
      sys.spawn_typed(math_interface(), []() -> behavior {
        return {
          [](plus_atom, int32_t a, int32_t b) {
            return std::make_tuple(result_atom::value, a + b);
          },
        };
      });
      FAIL("expected interface_mismatch");
    } catch (const failure& err) {
      CHECK(err.code() == errc::interface_mismatch);
    }
  }
}

TEST_CASE("immediate quit reaches done and notifies monitors") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto quick = sys.spawn([](event_based_actor* me) { me->quit(); });
  monitor(self.handle(), quick);
  bool got_down = false;
  REQUIRE(self->receive(
    behavior{[&](down_atom, actor_addr source, exit_reason reason) {
      got_down = true;
      CHECK(source == quick.address());
      CHECK(reason.is_normal());
    }},
    5s));
  CHECK(got_down);
}

TEST_CASE("per-sender ordering and exactly-once handling") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  static constexpr int num_senders = 2;
  static constexpr int per_sender = 1000;
  auto root = self.handle();
  auto receiver = sys.spawn([root](event_based_actor* me) {
    auto counts = std::make_shared<std::vector<int32_t>>(num_senders, 0);
    me->become(behavior{
      [me, root, counts](int32_t sender, int32_t seq) {
        // per-sender FIFO: sequence numbers arrive strictly ascending
        CHECK((*counts)[sender] == seq);
        ++(*counts)[sender];
        int done = 0;
        for (auto c : *counts)
          if (c == per_sender)
            ++done;
        if (done == num_senders) {
          me->send(root, make_message(atom("ok")));
          me->quit();
        }
      },
    });
  });
  for (int s = 0; s < num_senders; ++s) {
    sys.spawn([receiver, s](event_based_actor* me) {
      for (int i = 0; i < per_sender; ++i)
        me->send(receiver, make_message(int32_t{s}, int32_t{i}));
      me->quit();
    });
  }
  REQUIRE(self->receive(behavior{[](atom_value) {}}, 10s));
}

TEST_CASE("request-response with interposed messages") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto gate = std::make_shared<std::binary_semaphore>(0);
  // The responder parks inside its handler until the gate opens, which
  // forces the response to arrive after the unrelated message.
  auto responder = sys.spawn([gate](event_based_actor*) {
    return behavior{
      [gate](atom_value) {
        gate->acquire();
        return atom("pong");
      },
    };
  });
  auto requester = sys.spawn([root, responder](event_based_actor* me) {
    return behavior{
      [me, root, responder](atom_value head) {
        if (head == atom("start")) {
          me->sync_send(actor{responder}, make_message(atom("ping")), 10s)
            .then([me, root](atom_value pong) {
              CHECK(pong == atom("pong"));
              me->send(root, make_message(atom("resp")));
            });
        } else {
          // the unrelated message, reconsidered after the response
          me->send(root, make_message(atom("unrel"), head));
        }
      },
    };
  });
  sys.anon_send(requester, make_message(atom("start")));
  std::this_thread::sleep_for(50ms); // let the requester enter the await
  sys.anon_send(requester, make_message(atom("later")));
  gate->release();
  std::vector<std::string> order;
  for (int i = 0; i < 2; ++i) {
    REQUIRE(self->receive(
      behavior{
        [&order](atom_value what) { order.push_back(atom_decode(what)); },
        [&order](atom_value what, atom_value) {
          order.push_back(atom_decode(what));
        },
      },
      5s));
  }
  CHECK(order == std::vector<std::string>{"resp", "unrel"});
}

TEST_CASE("skipped messages preserve their relative order") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto gate = std::make_shared<std::binary_semaphore>(0);
  auto responder = sys.spawn([gate](event_based_actor*) {
    return behavior{[gate](atom_value) {
      gate->acquire();
      return atom("pong");
    }};
  });
  auto requester = sys.spawn([root, responder](event_based_actor* me) {
    return behavior{
      [me, root, responder](atom_value) {
        me->sync_send(actor{responder}, make_message(atom("ping")), 10s)
          .then([](atom_value) {});
      },
      [me, root](int32_t seq) { me->send(root, make_message(seq)); },
    };
  });
  sys.anon_send(requester, make_message(atom("start")));
  std::this_thread::sleep_for(50ms);
  for (int32_t i = 0; i < 5; ++i)
    sys.anon_send(requester, make_message(i));
  gate->release();
  for (int32_t i = 0; i < 5; ++i) {
    REQUIRE(self->receive(behavior{[i](int32_t seq) { CHECK(seq == i); }},
                          5s));
  }
}

TEST_CASE("request timeouts fire without blocking threads") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto silent = sys.spawn([]() -> behavior {
    return {[](atom_value) { /* never replies */ }};
  });
  auto requester = sys.spawn([root, silent](event_based_actor* me) {
    return behavior{
      [me, root, silent](atom_value) {
        me->sync_send(actor{silent}, make_message(atom("ping")), 100ms)
          .then([root, me](atom_value) { FAIL("unexpected response"); },
                [root, me](const error& err) {
                  me->send(root, make_message(err));
                });
      },
    };
  });
  sys.anon_send(requester, make_message(atom("go")));
  REQUIRE(self->receive(behavior{[](const error& err) {
                          CHECK(err.code == errc::request_timeout);
                        }},
                        5s));
}

TEST_CASE("requests to dead actors produce down errors") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto victim = sys.spawn([](event_based_actor* me) {
    return behavior{[me](atom_value) { me->quit(); }};
  });
  monitor(self.handle(), victim);
  sys.anon_send(victim, make_message(atom("die")));
  REQUIRE(self->receive(behavior{[](down_atom, actor_addr, exit_reason) {}},
                        5s));
  SUBCASE("with an error handler, the requester survives") {
    auto requester = sys.spawn([root, victim](event_based_actor* me) {
      return behavior{
        [me, root, victim](atom_value what) {
          if (what == atom("go")) {
            me->sync_send(actor{victim}, make_message(atom("ping")), 5s)
              .then([](atom_value) { FAIL("unexpected response"); },
                    [me, root](const error& err) {
                      me->send(root, make_message(err));
                    });
          } else {
            me->send(root, make_message(atom("alive")));
          }
        },
      };
    });
    sys.anon_send(requester, make_message(atom("go")));
    REQUIRE(self->receive(behavior{[](const error& err) {
                            CHECK(err.code == errc::request_down);
                          }},
                          5s));
    sys.anon_send(requester, make_message(atom("check")));
    REQUIRE(self->receive(behavior{[](atom_value a) {
                            CHECK(a == atom("alive"));
                          }},
                          5s));
  }
  SUBCASE("without an error handler, the requester exits abnormally") {
    auto requester = sys.spawn([victim](event_based_actor* me) {
      return behavior{
        [me, victim](atom_value) {
          me->sync_send(actor{victim}, make_message(atom("ping")), 5s)
            .then([](atom_value) { FAIL("unexpected response"); });
        },
      };
    });
    monitor(self.handle(), requester);
    sys.anon_send(requester, make_message(atom("go")));
    REQUIRE(self->receive(
      behavior{[&](down_atom, actor_addr source, exit_reason reason) {
        CHECK(source == requester.address());
        CHECK(reason.k == exit_reason::kind::unhandled_error);
      }},
      5s));
  }
}

TEST_CASE("scoped actors time out on silent targets") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto silent = sys.spawn([]() -> behavior {
    return {[](atom_value) {}};
  });
  auto t0 = std::chrono::steady_clock::now();
  auto reply = self->request(silent, make_message(atom("ping")), 100ms);
  auto elapsed = std::chrono::steady_clock::now() - t0;
  REQUIRE(std::holds_alternative<error>(reply));
  CHECK(std::get<error>(reply).code == errc::request_timeout);
  CHECK(elapsed >= 100ms);
  CHECK(elapsed < 4s);
}

TEST_CASE("become re-examines previously retained messages") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto lateblocker = sys.spawn([root](event_based_actor* me) {
    return behavior{
      [me, root](atom_value what) {
        if (what == atom("swap"))
          me->become(behavior{
            [me, root](int32_t v) { me->send(root, make_message(v)); },
            [](atom_value) {},
          });
      },
    };
  });
  // 42 does not match the initial behavior and stays in the mailbox.
  sys.anon_send(lateblocker, make_message(int32_t{42}));
  sys.anon_send(lateblocker, make_message(atom("swap")));
  REQUIRE(self->receive(behavior{[](int32_t v) { CHECK(v == 42); }}, 5s));
}

TEST_CASE("typed actors must keep their interface through become") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto math = sys.spawn_typed(
    math_interface(), [root](event_based_actor* me) -> behavior {
      return {
        [me, root](plus_atom, int32_t a, int32_t b) {
          if (a == 0) {
            // dropping the minus rule must fail
            try {
              me->become(behavior{
                [](plus_atom, int32_t x, int32_t y) {
                  return std::make_tuple(result_atom::value, x + y);
                },
              });
              me->send(root, make_message(atom("bad")));
            } catch (const failure& err) {
              me->send(root, make_message(error{err.code(), ""}));
            }
          }
          return std::make_tuple(result_atom::value, a + b);
        },
        [](minus_atom, int32_t a, int32_t b) {
          return std::make_tuple(result_atom::value, a - b);
        },
      };
    });
  sys.anon_send(math, make_message(plus_atom::value, 0, 0));
  REQUIRE(self->receive(behavior{[](const error& err) {
                          CHECK(err.code == errc::interface_mismatch);
                        }},
                        5s));
}

TEST_CASE("links propagate abnormal exits") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto a = sys.spawn([]() -> behavior {
    return {[](atom_value) {}};
  });
  auto b = sys.spawn([](event_based_actor* me) -> behavior {
    return {[me](atom_value) { me->quit(exit_reason::user(16)); }};
  });
  link(a, b);
  monitor(self.handle(), a);
  sys.anon_send(b, make_message(atom("die")));
  REQUIRE(self->receive(
    behavior{[&](down_atom, actor_addr source, exit_reason reason) {
      CHECK(source == a.address());
      CHECK(reason.k == exit_reason::kind::link_propagated);
      CHECK(reason.code == 16);
    }},
    5s));
}

TEST_CASE("normal exits do not propagate as failures") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto a = sys.spawn([root](event_based_actor* me) -> behavior {
    return {[me, root](atom_value) { me->send(root, make_message(atom("up"))); }};
  });
  auto b = sys.spawn([](event_based_actor* me) -> behavior {
    return {[me](atom_value) { me->quit(exit_reason::normal()); }};
  });
  link(a, b);
  monitor(self.handle(), b);
  sys.anon_send(b, make_message(atom("die")));
  REQUIRE(self->receive(behavior{[](down_atom, actor_addr, exit_reason r) {
                          CHECK(r.is_normal());
                        }},
                        5s));
  // a is still alive and responsive
  sys.anon_send(a, make_message(atom("ping")));
  REQUIRE(self->receive(behavior{[](atom_value v) {
                          CHECK(v == atom("up"));
                        }},
                        5s));
}

TEST_CASE("monitors are one-way and stackable") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto victim = sys.spawn([](event_based_actor* me) -> behavior {
    return {[me](atom_value) { me->quit(exit_reason::user(21)); }};
  });
  monitor(self.handle(), victim);
  monitor(self.handle(), victim);
  sys.anon_send(victim, make_message(atom("die")));
  int downs = 0;
  for (int i = 0; i < 2; ++i)
    REQUIRE(self->receive(behavior{[&](down_atom, actor_addr, exit_reason r) {
                            CHECK(r.code == 21);
                            ++downs;
                          }},
                          5s));
  CHECK(downs == 2);
}

TEST_CASE("linking a dead actor notifies immediately") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto dead = sys.spawn([](event_based_actor* me) {
    me->quit(exit_reason::user(20));
  });
  // wait until it is really gone
  monitor(self.handle(), dead);
  REQUIRE(self->receive(behavior{[](down_atom, actor_addr, exit_reason) {}},
                        5s));
  auto live = sys.spawn([]() -> behavior {
    return {[](atom_value) {}};
  });
  monitor(self.handle(), live);
  link(live, dead);
  REQUIRE(self->receive(
    behavior{[&](down_atom, actor_addr source, exit_reason reason) {
      CHECK(source == live.address());
      CHECK(reason.k == exit_reason::kind::link_propagated);
      CHECK(reason.code == 20);
    }},
    5s));
}

TEST_CASE("trapped exits arrive as ordinary messages") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  auto supervisor = sys.spawn([root](event_based_actor* me) -> behavior {
    me->trap_exit(true);
    return {
      [me, root](exit_atom, actor_addr source, exit_reason reason) {
        me->send(root, make_message(source, reason));
      },
    };
  });
  auto worker = sys.spawn([](event_based_actor* me) -> behavior {
    return {[me](atom_value) { me->quit(exit_reason::user(33)); }};
  });
  link(supervisor, worker);
  sys.anon_send(worker, make_message(atom("die")));
  REQUIRE(self->receive(behavior{[&](actor_addr source, exit_reason reason) {
                          CHECK(source == worker.address());
                          CHECK(reason.code == 33);
                        }},
                        5s));
  // the supervisor survived
  CHECK_FALSE(supervisor.ptr()->terminated());
}

TEST_CASE("handles compare by actor identity") {
  actor_system sys{small_sched()};
  auto math = sys.spawn_typed(math_interface(), math_impl);
  auto dynamic = actor_cast(math);
  CHECK(handle_addr(dynamic) == handle_addr(math));
  auto narrowed = narrow(math, messaging_interface{math_interface().rules()[0]});
  CHECK(handle_addr(narrowed) == handle_addr(math));
  auto other = sys.spawn_typed(math_interface(), math_impl);
  CHECK(handle_addr(other) != handle_addr(math));
  CHECK_THROWS_AS(
    narrow(narrowed, math_interface()), // widening is not allowed
    failure);
}

TEST_CASE("no lost wakeups and no concurrent execution under stress") {
  auto before = local_actor::concurrent_resume_detected();
  constexpr int num_actors = 16;
  constexpr int senders = 4;
  constexpr int per_sender = 2500;
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  std::vector<actor> actors;
  std::atomic<uint64_t> handled{0};
  for (int i = 0; i < num_actors; ++i) {
    actors.push_back(sys.spawn([&handled]() -> behavior {
      return {[&handled](int32_t, int32_t) {
        handled.fetch_add(1, std::memory_order_relaxed);
      }};
    }));
  }
  std::vector<std::thread> threads;
  for (int s = 0; s < senders; ++s) {
    threads.emplace_back([&, s] {
      std::mt19937 rng{static_cast<unsigned>(s)};
      for (int i = 0; i < per_sender; ++i) {
        auto& target = actors[rng() % num_actors];
        sys.anon_send(target, make_message(int32_t{s}, int32_t{i}));
      }
    });
  }
  for (auto& t : threads)
    t.join();
  auto deadline = std::chrono::steady_clock::now() + 30s;
  while (handled.load() < uint64_t{senders} * per_sender
         && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(1ms);
  CHECK(handled.load() == uint64_t{senders} * per_sender);
  CHECK(local_actor::concurrent_resume_detected() == before);
}

TEST_CASE("detached actors run on their own thread") {
  actor_system sys{small_sched()};
  scoped_actor self{sys};
  auto root = self.handle();
  spawn_options opts;
  opts.detached = true;
  auto worker = sys.spawn(
    [root](event_based_actor* me) -> behavior {
      return {
        [me, root](atom_value v) {
          if (v == atom("stop")) {
            me->quit();
            return;
          }
          me->send(root, make_message(atom("echo"), v));
        },
      };
    },
    opts);
  sys.anon_send(worker, make_message(atom("hi")));
  REQUIRE(self->receive(behavior{[](atom_value, atom_value v) {
                          CHECK(v == atom("hi"));
                        }},
                        5s));
  sys.anon_send(worker, make_message(atom("stop")));
}

} // TEST_SUITE

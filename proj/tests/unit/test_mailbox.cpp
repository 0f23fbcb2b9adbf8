#include <doctest.h>

#include <atomic>
#include <map>
#include <memory>
#include <thread>
#include <vector>

#include "cafx/mailbox.hpp"

using namespace cafx;

namespace {

struct test_node : mailbox_node {
  int producer;
  int seq;

  test_node(int p, int s) : producer(p), seq(s) {
    // nop
  }
};

std::unique_ptr<mailbox_node> node(int producer, int seq) {
  return std::make_unique<test_node>(producer, seq);
}

const test_node& as_test(const mailbox_node& n) {
  return static_cast<const test_node&>(n);
}

} // namespace

TEST_SUITE("mailbox") {

TEST_CASE("enqueue reports the empty-and-parked transition") {
  cached_stack_mailbox mbox;
  REQUIRE(mbox.try_block());
  auto n1 = node(0, 0);
  CHECK(mbox.enqueue(n1) == enqueue_result::unblocked_reader);
  auto n2 = node(0, 1);
  CHECK(mbox.enqueue(n2) == enqueue_result::plain_success);
  auto d1 = mbox.dequeue();
  auto d2 = mbox.dequeue();
  REQUIRE(d1);
  REQUIRE(d2);
  CHECK(as_test(*d1).seq == 0);
  CHECK(as_test(*d2).seq == 1);
  CHECK(mbox.dequeue() == nullptr);
}

TEST_CASE("try_block fails when a message raced in") {
  cached_stack_mailbox mbox;
  auto n = node(0, 0);
  CHECK(mbox.enqueue(n) == enqueue_result::plain_success);
  CHECK_FALSE(mbox.try_block());
  CHECK(mbox.dequeue() != nullptr);
  CHECK(mbox.try_block());
  CHECK(mbox.try_unblock());
}

TEST_CASE("closed mailboxes reject and report") {
  cached_stack_mailbox mbox;
  auto drained = mbox.close();
  CHECK(drained.empty());
  CHECK(mbox.closed());
  auto n = node(0, 0);
  CHECK(mbox.enqueue(n) == enqueue_result::rejected_closed);
  CHECK(n != nullptr); // ownership stays with the caller
}

TEST_CASE("close drains pending nodes in FIFO order") {
  cached_stack_mailbox mbox;
  for (int i = 0; i < 3; ++i) {
    auto n = node(0, i);
    REQUIRE(mbox.enqueue(n) == enqueue_result::plain_success);
  }
  auto drained = mbox.close();
  REQUIRE(drained.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(as_test(*drained[i]).seq == i);
}

TEST_CASE("interleaved producers keep per-producer order") {
  cached_stack_mailbox mbox;
  auto a1 = node(0, 1), b1 = node(1, 1), a2 = node(0, 2);
  REQUIRE(mbox.enqueue(a1) == enqueue_result::plain_success);
  REQUIRE(mbox.enqueue(b1) == enqueue_result::plain_success);
  REQUIRE(mbox.enqueue(a2) == enqueue_result::plain_success);
  std::map<int, int> last_seq;
  while (auto n = mbox.dequeue()) {
    auto& t = as_test(*n);
    auto i = last_seq.find(t.producer);
    if (i != last_seq.end())
      CHECK(i->second < t.seq);
    last_seq[t.producer] = t.seq;
  }
  CHECK(last_seq[0] == 2);
  CHECK(last_seq[1] == 1);
}

TEST_CASE("a drain costs one CAS regardless of length") {
  cached_stack_mailbox mbox;
  for (auto n : {1, 100, 10'000}) {
    auto before = mbox.drain_cas_attempts();
    for (int i = 0; i < n; ++i) {
      auto x = node(0, i);
      REQUIRE(mbox.enqueue(x) == enqueue_result::plain_success);
    }
    int drained = 0;
    while (mbox.dequeue())
      ++drained;
    CHECK(drained == n);
    CHECK(mbox.drain_cas_attempts() == before + 1);
  }
}

TEST_CASE("producer stress: no loss, no duplication, FIFO per producer") {
  constexpr int num_producers = 8;
  constexpr int per_producer = 100'000;
  cached_stack_mailbox mbox;
  std::vector<std::thread> producers;
  for (int p = 0; p < num_producers; ++p) {
    producers.emplace_back([&mbox, p] {
      for (int i = 0; i < per_producer; ++i) {
        auto n = node(p, i);
        REQUIRE(mbox.enqueue(n) == enqueue_result::plain_success);
      }
    });
  }
  std::vector<int> next_seq(num_producers, 0);
  uint64_t received = 0;
  while (received < uint64_t{num_producers} * per_producer) {
    auto n = mbox.dequeue();
    if (!n) {
      std::this_thread::yield();
      continue;
    }
    auto& t = as_test(*n);
    REQUIRE(t.seq == next_seq[t.producer]);
    ++next_seq[t.producer];
    ++received;
  }
  for (auto& t : producers)
    t.join();
  CHECK(mbox.dequeue() == nullptr);
  CHECK(received == 800'000);
}

TEST_CASE("enqueue racing close loses no node") {
  for (int round = 0; round < 50; ++round) {
    cached_stack_mailbox mbox;
    constexpr int num_producers = 4;
    constexpr int per_producer = 500;
    std::atomic<int> rejected{0};
    std::vector<std::thread> producers;
    for (int p = 0; p < num_producers; ++p) {
      producers.emplace_back([&, p] {
        for (int i = 0; i < per_producer; ++i) {
          auto n = node(p, i);
          if (mbox.enqueue(n) == enqueue_result::rejected_closed) {
            rejected.fetch_add(1);
            REQUIRE(n != nullptr);
          }
        }
      });
    }
    int drained = 0;
    for (int i = 0; i < 200; ++i)
      if (mbox.dequeue())
        ++drained;
    drained += static_cast<int>(mbox.close().size());
    // late enqueues bounce off the closed mailbox
    for (auto& t : producers)
      t.join();
    CHECK(drained + rejected.load() == num_producers * per_producer);
  }
}

} // TEST_SUITE

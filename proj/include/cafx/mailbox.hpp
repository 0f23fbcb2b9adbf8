#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

namespace cafx {

/// Intrusive hook for everything that travels through a mailbox.
struct mailbox_node {
  mailbox_node* next = nullptr;

  virtual ~mailbox_node() = default;
};

enum class enqueue_result : uint8_t {
  /// The mailbox was empty and its reader parked; the caller must
  /// reschedule the owner.
  unblocked_reader,
  plain_success,
  rejected_closed,
};

/// Single-reader-many-writer queue: writers push onto a lock-free stack
/// with one CAS, the owning reader drains the stack in reverse order into
/// a private FIFO cache and pops from there. Enqueue is O(1); dequeue is
/// amortized O(1) with an O(n) worst case when draining.
///
/// enqueue may be called from any thread. dequeue, try_block and close
/// are owner-only; ownership may migrate between threads but never runs
/// concurrently.
class cached_stack_mailbox {
public:
  cached_stack_mailbox() : stack_(nullptr) {
    // nop
  }

  cached_stack_mailbox(const cached_stack_mailbox&) = delete;
  cached_stack_mailbox& operator=(const cached_stack_mailbox&) = delete;

  ~cached_stack_mailbox();

  /// Links `node` as the new stack tail with a single successful CAS.
  /// On rejected_closed, ownership stays with the caller.
  enqueue_result enqueue(std::unique_ptr<mailbox_node>& node) noexcept;

  /// Pops the cache front; drains the stack into the cache first when the
  /// cache is empty. Returns null iff both are empty.
  std::unique_ptr<mailbox_node> dequeue() noexcept;

  /// Transitions an empty mailbox into the reader-parked state. Fails if
  /// a message slipped in since the last dequeue.
  bool try_block() noexcept;

  /// Reverts a previous try_block (owner-only, e.g. before a blocking
  /// receive got interrupted).
  bool try_unblock() noexcept;

  /// Closes the mailbox and returns all pending nodes in FIFO order.
  std::vector<std::unique_ptr<mailbox_node>> close() noexcept;

  bool closed() const noexcept {
    return stack_.load(std::memory_order_acquire) == closed_tag();
  }

  bool blocked() const noexcept {
    return stack_.load(std::memory_order_acquire) == blocked_tag();
  }

  /// Owner-side emptiness check.
  bool empty() const noexcept {
    if (cache_head_ != nullptr)
      return false;
    auto e = stack_.load(std::memory_order_acquire);
    return e == nullptr || e == blocked_tag() || e == closed_tag();
  }

  /// Number of CAS attempts spent draining the stack (owner-side test
  /// instrumentation; one per drain unless writers interfere).
  uint64_t drain_cas_attempts() const noexcept {
    return drain_cas_attempts_;
  }

private:
  mailbox_node* blocked_tag() const noexcept {
    return const_cast<mailbox_node*>(&blocked_dummy_);
  }

  mailbox_node* closed_tag() const noexcept {
    return const_cast<mailbox_node*>(&closed_dummy_);
  }

  bool is_tag(const mailbox_node* node) const noexcept {
    return node == &blocked_dummy_ || node == &closed_dummy_;
  }

  void pop_cache_into(std::vector<std::unique_ptr<mailbox_node>>& out) noexcept;

  std::atomic<mailbox_node*> stack_;
  mailbox_node* cache_head_ = nullptr;
  mailbox_node* cache_tail_ = nullptr;
  uint64_t drain_cas_attempts_ = 0;
  mailbox_node blocked_dummy_;
  mailbox_node closed_dummy_;
};

} // namespace cafx

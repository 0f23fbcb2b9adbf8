#include "cafx/mailbox.hpp"

namespace cafx {

cached_stack_mailbox::~cached_stack_mailbox() {
  if (!closed())
    close();
  else
    while (cache_head_ != nullptr)
      dequeue();
}

enqueue_result
cached_stack_mailbox::enqueue(std::unique_ptr<mailbox_node>& node) noexcept {
  auto raw = node.get();
  auto e = stack_.load(std::memory_order_relaxed);
  for (;;) {
    if (e == closed_tag())
      return enqueue_result::rejected_closed;
    auto parked = e == blocked_tag();
    raw->next = parked ? nullptr : e;
    if (stack_.compare_exchange_weak(e, raw, std::memory_order_release,
                                     std::memory_order_relaxed)) {
      node.release();
      return parked ? enqueue_result::unblocked_reader
                    : enqueue_result::plain_success;
    }
  }
}

std::unique_ptr<mailbox_node> cached_stack_mailbox::dequeue() noexcept {
  if (cache_head_ == nullptr) {
    // Cache drained; take over the whole stack with one CAS and reverse
    // it into FIFO order.
    auto e = stack_.load(std::memory_order_relaxed);
    while (e != nullptr && !is_tag(e)) {
      ++drain_cas_attempts_;
      if (stack_.compare_exchange_strong(e, nullptr,
                                         std::memory_order_acquire,
                                         std::memory_order_relaxed)) {
        cache_tail_ = e;
        mailbox_node* head = nullptr;
        while (e != nullptr) {
          auto next = e->next;
          e->next = head;
          head = e;
          e = next;
        }
        cache_head_ = head;
        break;
      }
    }
  }
  if (cache_head_ == nullptr)
    return nullptr;
  auto node = cache_head_;
  cache_head_ = node->next;
  if (cache_head_ == nullptr)
    cache_tail_ = nullptr;
  node->next = nullptr;
  return std::unique_ptr<mailbox_node>{node};
}

bool cached_stack_mailbox::try_block() noexcept {
  if (cache_head_ != nullptr)
    return false;
  mailbox_node* expected = nullptr;
  return stack_.compare_exchange_strong(expected, blocked_tag(),
                                        std::memory_order_acq_rel,
                                        std::memory_order_relaxed);
}

bool cached_stack_mailbox::try_unblock() noexcept {
  auto expected = blocked_tag();
  return stack_.compare_exchange_strong(expected, nullptr,
                                        std::memory_order_acq_rel,
                                        std::memory_order_relaxed);
}

std::vector<std::unique_ptr<mailbox_node>>
cached_stack_mailbox::close() noexcept {
  std::vector<std::unique_ptr<mailbox_node>> drained;
  pop_cache_into(drained);
  auto e = stack_.exchange(closed_tag(), std::memory_order_acq_rel);
  if (e != nullptr && !is_tag(e)) {
    // Stack is newest-first; reverse it to keep FIFO order.
    mailbox_node* head = nullptr;
    while (e != nullptr) {
      auto next = e->next;
      e->next = head;
      head = e;
      e = next;
    }
    while (head != nullptr) {
      auto next = head->next;
      head->next = nullptr;
      drained.emplace_back(head);
      head = next;
    }
  }
  return drained;
}

void cached_stack_mailbox::pop_cache_into(
  std::vector<std::unique_ptr<mailbox_node>>& out) noexcept {
  while (cache_head_ != nullptr) {
    auto node = cache_head_;
    cache_head_ = node->next;
    node->next = nullptr;
    out.emplace_back(node);
  }
  cache_tail_ = nullptr;
}

} // namespace cafx

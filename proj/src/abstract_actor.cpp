#include "cafx/abstract_actor.hpp"

#include "cafx/actor_system.hpp"
#include "cafx/atoms.hpp"

namespace cafx {

abstract_actor::meta_block& abstract_actor::lazy_meta() {
  if (!meta_)
    meta_ = std::make_unique<meta_block>();
  return *meta_;
}

void abstract_actor::add_monitor(const actor_addr& observer) {
  {
    spin_guard guard{meta_lock_};
    if (!dead_.load(std::memory_order_acquire)) {
      lazy_meta().monitors.push_back(observer);
      return;
    }
  }
  // Already terminated: notify immediately with the recorded reason.
  system_->deliver(observer, make_envelope(make_message(down_atom::value,
                                                        addr_, reason_),
                                           addr_));
}

bool abstract_actor::remove_monitor(const actor_addr& observer) {
  spin_guard guard{meta_lock_};
  if (!meta_)
    return false;
  auto& monitors = meta_->monitors;
  for (auto i = monitors.begin(); i != monitors.end(); ++i) {
    if (*i == observer) {
      monitors.erase(i);
      return true;
    }
  }
  return false;
}

bool abstract_actor::add_link_side(const actor_addr& peer) {
  spin_guard guard{meta_lock_};
  if (dead_.load(std::memory_order_acquire))
    return false;
  auto& links = lazy_meta().links;
  for (const auto& l : links)
    if (l == peer)
      return true;
  links.push_back(peer);
  return true;
}

bool abstract_actor::remove_link_side(const actor_addr& peer) {
  spin_guard guard{meta_lock_};
  if (!meta_)
    return false;
  auto& links = meta_->links;
  for (auto i = links.begin(); i != links.end(); ++i) {
    if (*i == peer) {
      links.erase(i);
      return true;
    }
  }
  return false;
}

void abstract_actor::attach_on_exit(
  std::function<void(const exit_reason&)> hook) {
  {
    spin_guard guard{meta_lock_};
    if (!dead_.load(std::memory_order_acquire)) {
      lazy_meta().exit_hooks.push_back(std::move(hook));
      return;
    }
  }
  hook(reason_);
}

void abstract_actor::register_pending_request(uint64_t response_id,
                                              const actor_addr& requester) {
  {
    spin_guard guard{meta_lock_};
    if (!dead_.load(std::memory_order_acquire)) {
      lazy_meta().pending_requests.emplace_back(response_id, requester);
      return;
    }
  }
  system_->deliver(requester,
                   make_envelope(make_message(error{errc::request_down,
                                                    "target already down"}),
                                 addr_, response_id));
}

void abstract_actor::drop_pending_request(uint64_t response_id) {
  spin_guard guard{meta_lock_};
  if (!meta_)
    return;
  auto& pending = meta_->pending_requests;
  for (auto i = pending.begin(); i != pending.end(); ++i) {
    if (i->first == response_id) {
      pending.erase(i);
      return;
    }
  }
}

void abstract_actor::finalize(const exit_reason& reason) {
  std::unique_ptr<meta_block> meta;
  {
    spin_guard guard{meta_lock_};
    if (dead_.load(std::memory_order_acquire))
      return;
    reason_ = reason;
    dead_.store(true, std::memory_order_release);
    meta = std::move(meta_);
  }
  if (!meta)
    return;
  for (const auto& observer : meta->monitors)
    system_->deliver(observer, make_envelope(make_message(down_atom::value,
                                                          addr_, reason),
                                             addr_));
  for (const auto& peer : meta->links)
    system_->send_exit(peer, addr_, reason);
  for (const auto& [response_id, requester] : meta->pending_requests)
    system_->deliver(requester,
                     make_envelope(make_message(
                                     error{errc::request_down,
                                           "target terminated"}),
                                   addr_, response_id));
  for (auto& hook : meta->exit_hooks)
    hook(reason);
}

} // namespace cafx

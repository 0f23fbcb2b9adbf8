#pragma once

#include <cstdint>
#include <memory>

#include "cafx/actor_addr.hpp"
#include "cafx/mailbox.hpp"
#include "cafx/message.hpp"

namespace cafx {

/// What travels through mailboxes: a message, its sender and a message
/// id. Id 0 marks asynchronous messages; requests carry a fresh nonzero
/// id and their response reuses it with the top bit set.
struct envelope : mailbox_node {
  enum class category : uint8_t {
    ordinary,
    /// Exit signal: content is (atom exit, source, reason); terminates
    /// untrapping receivers unless the reason is normal.
    exit_signal,
  };

  envelope() = default;

  envelope(message content, actor_addr sender, uint64_t mid)
    : content(std::move(content)), sender(sender), mid(mid) {
    // nop
  }

  static constexpr uint64_t response_flag = uint64_t{1} << 63;

  static constexpr uint64_t response_id(uint64_t request_id) noexcept {
    return request_id | response_flag;
  }

  message content;
  actor_addr sender;
  uint64_t mid = 0;
  category cat = category::ordinary;
  /// Hard exit signals bypass exit trapping (runtime shutdown).
  bool hard_kill = false;

  bool is_response() const noexcept {
    return (mid & response_flag) != 0;
  }

  bool is_request() const noexcept {
    return mid != 0 && !is_response();
  }
};

inline std::unique_ptr<envelope> make_envelope(message content,
                                               actor_addr sender,
                                               uint64_t mid = 0) {
  return std::make_unique<envelope>(std::move(content), sender, mid);
}

} // namespace cafx

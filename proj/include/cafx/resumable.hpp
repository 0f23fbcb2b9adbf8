#pragma once

#include <cstddef>

namespace cafx {

/// A schedulable unit of work, usually an actor that became ready.
class resumable {
public:
  enum class resume_result {
    /// Mailbox drained; wait for the next message.
    awaiting,
    /// Message budget exhausted; re-enqueue.
    yielded,
    /// Terminal state reached; dispose after the completion hook.
    finished,
  };

  virtual ~resumable() = default;

  /// Processes up to `max_msgs` messages.
  virtual resume_result resume(size_t max_msgs) = 0;

  /// Reference counting used by scheduler queues.
  virtual void ref_job() noexcept = 0;
  virtual void deref_job() noexcept = 0;
};

} // namespace cafx

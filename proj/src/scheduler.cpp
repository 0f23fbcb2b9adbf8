#include "cafx/scheduler.hpp"

#include <cstdlib>

namespace cafx {

scheduler_config scheduler_config::from_env() {
  scheduler_config cfg;
  if (auto env = std::getenv("CAFX_WORKERS")) {
    auto n = std::strtoull(env, nullptr, 10);
    if (n > 0)
      cfg.num_workers = static_cast<size_t>(n);
  }
  if (auto env = std::getenv("CAFX_MAX_MSGS")) {
    auto n = std::strtoull(env, nullptr, 10);
    if (n > 0)
      cfg.max_msgs = static_cast<size_t>(n);
  }
  return cfg;
}

} // namespace cafx

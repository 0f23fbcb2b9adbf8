#include "cafx/actor_addr.hpp"

#include <cstdio>
#include <random>

namespace cafx {

node_id node_id::random() {
  std::random_device rd;
  node_id result;
  for (auto& b : result.bytes)
    b = static_cast<uint8_t>(rd());
  return result;
}

std::string to_string(const node_id& node) {
  std::string result;
  result.reserve(32);
  char buf[3];
  for (auto b : node.bytes) {
    snprintf(buf, sizeof(buf), "%02x", b);
    result += buf;
  }
  return result;
}

std::string to_string(const actor_addr& addr) {
  return to_string(addr.node) + "/" + std::to_string(addr.id);
}

} // namespace cafx

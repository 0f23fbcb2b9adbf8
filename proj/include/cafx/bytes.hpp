#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cafx {

using byte_buffer = std::vector<uint8_t>;
using byte_span = std::span<const uint8_t>;

} // namespace cafx

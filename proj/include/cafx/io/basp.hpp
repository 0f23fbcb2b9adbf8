#pragma once

#include <array>
#include <cstdint>

#include "cafx/actor_addr.hpp"
#include "cafx/bytes.hpp"
#include "cafx/error.hpp"

namespace cafx::io::basp {

inline constexpr std::array<uint8_t, 4> magic_bytes{'C', 'A', 'F', 'X'};
inline constexpr uint16_t protocol_version = 1;
inline constexpr size_t header_size = 60;

enum class operation : uint8_t {
  server_handshake = 1,
  client_handshake = 2,
  dispatch = 3,
  monitor = 4,
  kill_proxy = 5,
};

/// Frame flag bits (dispatch frames).
inline constexpr uint8_t flag_exit_signal = 0x01;
inline constexpr uint8_t flag_hard_kill = 0x02;

/// Wire unit of the node-to-node transport. All multi-byte integers are
/// big-endian on the wire.
struct frame {
  std::array<uint8_t, 4> magic = magic_bytes;
  uint16_t version = protocol_version;
  operation op = operation::dispatch;
  uint8_t flags = 0;
  node_id source_node;
  node_id dest_node;
  uint32_t source_actor = 0;
  uint32_t dest_actor = 0;
  uint64_t message_id = 0;
  byte_buffer payload;

  bool operator==(const frame&) const = default;
};

/// Appends the binary encoding of `f` to `out`.
void encode(const frame& f, byte_buffer& out);

byte_buffer encode(const frame& f);

/// Decodes the fixed-size header; `bytes` must hold exactly header_size
/// bytes. The returned frame has an empty payload; the caller reads
/// payload_len separately.
struct header_info {
  frame head;
  uint32_t payload_len = 0;
};

header_info decode_header(byte_span bytes);

/// Decodes one complete frame (header plus payload, nothing trailing).
frame decode(byte_span bytes);

} // namespace cafx::io::basp

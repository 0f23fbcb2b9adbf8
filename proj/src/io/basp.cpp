#include "cafx/io/basp.hpp"

#include <algorithm>

#include "cafx/detail/wire.hpp"

namespace cafx::io::basp {

void encode(const frame& f, byte_buffer& out) {
  out.insert(out.end(), f.magic.begin(), f.magic.end());
  detail::put_u16(out, f.version);
  detail::put_u8(out, static_cast<uint8_t>(f.op));
  detail::put_u8(out, f.flags);
  detail::put_bytes(out, byte_span{f.source_node.bytes.data(), 16});
  detail::put_bytes(out, byte_span{f.dest_node.bytes.data(), 16});
  detail::put_u32(out, f.source_actor);
  detail::put_u32(out, f.dest_actor);
  detail::put_u64(out, f.message_id);
  detail::put_u32(out, static_cast<uint32_t>(f.payload.size()));
  detail::put_bytes(out, byte_span{f.payload.data(), f.payload.size()});
}

byte_buffer encode(const frame& f) {
  byte_buffer out;
  out.reserve(header_size + f.payload.size());
  encode(f, out);
  return out;
}

header_info decode_header(byte_span bytes) {
  if (bytes.size() != header_size)
    throw failure{errc::codec_error, "frame header has wrong size"};
  cafx::detail::reader in{bytes};
  header_info result;
  auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), magic_bytes.begin()))
    throw failure{errc::codec_error, "bad frame magic"};
  result.head.version = in.u16();
  auto op = in.u8();
  if (op < 1 || op > 5)
    throw failure{errc::codec_error, "unknown frame operation"};
  result.head.op = static_cast<operation>(op);
  result.head.flags = in.u8();
  auto src = in.bytes(16);
  std::copy(src.begin(), src.end(), result.head.source_node.bytes.begin());
  auto dst = in.bytes(16);
  std::copy(dst.begin(), dst.end(), result.head.dest_node.bytes.begin());
  result.head.source_actor = in.u32();
  result.head.dest_actor = in.u32();
  result.head.message_id = in.u64();
  result.payload_len = in.u32();
  in.expect_done();
  return result;
}

frame decode(byte_span bytes) {
  if (bytes.size() < header_size)
    throw failure{errc::codec_error, "truncated frame"};
  auto info = decode_header(bytes.subspan(0, header_size));
  auto payload = bytes.subspan(header_size);
  if (payload.size() != info.payload_len)
    throw failure{errc::codec_error, "frame payload length mismatch"};
  info.head.payload.assign(payload.begin(), payload.end());
  return info.head;
}

} // namespace cafx::io::basp

#include "cafx/message.hpp"

#include <atomic>

namespace cafx {

namespace {

std::atomic<uint64_t> deep_copies_{0};
std::atomic<uint64_t> shares_{0};

} // namespace

copy_stats::snapshot copy_stats::now() noexcept {
  return {deep_copies_.load(std::memory_order_relaxed),
          shares_.load(std::memory_order_relaxed)};
}

void copy_stats::note_deep_copy() noexcept {
  deep_copies_.fetch_add(1, std::memory_order_relaxed);
}

void copy_stats::note_share() noexcept {
  shares_.fetch_add(1, std::memory_order_relaxed);
}

bool element_wise_equal(const message& lhs, const message& rhs,
                        const type_registry& reg) {
  if (lhs.size() != rhs.size())
    return false;
  for (size_t i = 0; i < lhs.size(); ++i) {
    if (lhs.type_at(i) != rhs.type_at(i))
      return false;
    auto meta = reg.by_id(lhs.type_at(i));
    if (!meta || !meta->equals
        || !meta->equals(lhs.get_any(i), rhs.get_any(i)))
      return false;
  }
  return true;
}

byte_buffer serialize(const message& msg, const type_registry& reg) {
  byte_buffer out;
  detail::put_u16(out, static_cast<uint16_t>(msg.size()));
  for (size_t i = 0; i < msg.size(); ++i) {
    auto id = msg.type_at(i);
    auto meta = reg.by_id(id);
    if (!meta)
      throw failure{errc::unknown_type, "element type not registered"};
    if (!meta->encode)
      throw failure{errc::codec_error,
                    "type has no wire codec: " + meta->name};
    detail::put_u16(out, id);
    auto len_at = out.size();
    detail::put_u32(out, 0);
    meta->encode(msg.get_any(i), out);
    auto len = static_cast<uint32_t>(out.size() - len_at - 4);
    out[len_at] = static_cast<uint8_t>(len >> 24);
    out[len_at + 1] = static_cast<uint8_t>(len >> 16);
    out[len_at + 2] = static_cast<uint8_t>(len >> 8);
    out[len_at + 3] = static_cast<uint8_t>(len);
  }
  return out;
}

message deserialize(byte_span bytes, const type_registry& reg) {
  detail::reader in{bytes};
  auto arity = in.u16();
  if (arity == 0) {
    in.expect_done();
    return message{};
  }
  std::vector<message_data::element> elems;
  elems.reserve(arity);
  for (uint16_t i = 0; i < arity; ++i) {
    auto id = in.u16();
    auto meta = reg.by_id(id);
    if (!meta)
      throw failure{errc::codec_error,
                    "unknown type id " + std::to_string(id)};
    if (!meta->decode)
      throw failure{errc::codec_error,
                    "type has no wire codec: " + meta->name};
    auto len = in.u32();
    detail::reader payload{in.bytes(len)};
    elems.push_back({id, meta->decode(payload)});
  }
  in.expect_done();
  return message{make_counted<message_data>(std::move(elems))};
}

std::string to_string(const message& msg) {
  const auto& reg = type_registry::global();
  std::string result = "(";
  for (size_t i = 0; i < msg.size(); ++i) {
    if (i > 0)
      result += ", ";
    auto meta = reg.by_id(msg.type_at(i));
    result += meta ? meta->name : "?";
    if (msg.type_at(i) == builtin::atom)
      result += " " + to_string(msg.get<atom_value>(i));
  }
  result += ")";
  return result;
}

} // namespace cafx

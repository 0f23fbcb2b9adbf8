#include "cafx/type_registry.hpp"

#include "cafx/actor_addr.hpp"
#include "cafx/atom.hpp"
#include "cafx/exit_reason.hpp"

namespace cafx {

namespace {

template <class T, class U>
void encode_int(const std::any& value, byte_buffer& out) {
  auto x = static_cast<U>(*std::any_cast<T>(&value));
  if constexpr (sizeof(U) == 1)
    detail::put_u8(out, static_cast<uint8_t>(x));
  else if constexpr (sizeof(U) == 2)
    detail::put_u16(out, static_cast<uint16_t>(x));
  else if constexpr (sizeof(U) == 4)
    detail::put_u32(out, static_cast<uint32_t>(x));
  else
    detail::put_u64(out, static_cast<uint64_t>(x));
}

template <class T, class U>
std::any decode_int(detail::reader& in) {
  U x;
  if constexpr (sizeof(U) == 1)
    x = static_cast<U>(in.u8());
  else if constexpr (sizeof(U) == 2)
    x = static_cast<U>(in.u16());
  else if constexpr (sizeof(U) == 4)
    x = static_cast<U>(in.u32());
  else
    x = static_cast<U>(in.u64());
  in.expect_done();
  return std::any{static_cast<T>(x)};
}

void encode_bool(const std::any& value, byte_buffer& out) {
  detail::put_u8(out, *std::any_cast<bool>(&value) ? 1 : 0);
}

std::any decode_bool(detail::reader& in) {
  auto b = in.u8();
  in.expect_done();
  if (b > 1)
    throw failure{errc::codec_error, "invalid boolean byte"};
  return std::any{b == 1};
}

void encode_f32(const std::any& value, byte_buffer& out) {
  detail::put_u32(out, detail::float_bits(*std::any_cast<float>(&value)));
}

std::any decode_f32(detail::reader& in) {
  auto bits = in.u32();
  in.expect_done();
  return std::any{std::bit_cast<float>(bits)};
}

void encode_f64(const std::any& value, byte_buffer& out) {
  detail::put_u64(out, detail::double_bits(*std::any_cast<double>(&value)));
}

std::any decode_f64(detail::reader& in) {
  auto bits = in.u64();
  in.expect_done();
  return std::any{std::bit_cast<double>(bits)};
}

void encode_text(const std::any& value, byte_buffer& out) {
  const auto& str = *std::any_cast<std::string>(&value);
  out.insert(out.end(), str.begin(), str.end());
}

std::any decode_text(detail::reader& in) {
  auto bytes = in.bytes(in.remaining());
  return std::any{std::string{bytes.begin(), bytes.end()}};
}

void encode_bytes(const std::any& value, byte_buffer& out) {
  const auto& buf = *std::any_cast<byte_buffer>(&value);
  out.insert(out.end(), buf.begin(), buf.end());
}

std::any decode_bytes(detail::reader& in) {
  auto bytes = in.bytes(in.remaining());
  return std::any{byte_buffer{bytes.begin(), bytes.end()}};
}

void encode_atom(const std::any& value, byte_buffer& out) {
  detail::put_u64(out,
                  static_cast<uint64_t>(*std::any_cast<atom_value>(&value)));
}

std::any decode_atom(detail::reader& in) {
  auto bits = in.u64();
  in.expect_done();
  auto v = static_cast<atom_value>(bits);
  if (!is_valid_atom_value(v))
    throw failure{errc::codec_error, "malformed atom value"};
  return std::any{v};
}

void encode_addr(const std::any& value, byte_buffer& out) {
  const auto& addr = *std::any_cast<actor_addr>(&value);
  detail::put_bytes(out, byte_span{addr.node.bytes.data(), 16});
  detail::put_u32(out, addr.id);
}

std::any decode_addr(detail::reader& in) {
  actor_addr addr;
  auto node = in.bytes(16);
  std::copy(node.begin(), node.end(), addr.node.bytes.begin());
  addr.id = in.u32();
  in.expect_done();
  return std::any{addr};
}

void encode_error(const std::any& value, byte_buffer& out) {
  const auto& err = *std::any_cast<error>(&value);
  detail::put_u8(out, static_cast<uint8_t>(err.code));
  out.insert(out.end(), err.context.begin(), err.context.end());
}

std::any decode_error(detail::reader& in) {
  error err;
  err.code = static_cast<errc>(in.u8());
  auto bytes = in.bytes(in.remaining());
  err.context.assign(bytes.begin(), bytes.end());
  return std::any{err};
}

void encode_exit(const std::any& value, byte_buffer& out) {
  const auto& reason = *std::any_cast<exit_reason>(&value);
  detail::put_u8(out, static_cast<uint8_t>(reason.k));
  detail::put_u32(out, reason.code);
}

std::any decode_exit(detail::reader& in) {
  exit_reason reason;
  auto k = in.u8();
  if (k < 1 || k > 4)
    throw failure{errc::codec_error, "invalid exit reason kind"};
  reason.k = static_cast<exit_reason::kind>(k);
  reason.code = in.u32();
  in.expect_done();
  return std::any{reason};
}

} // namespace

type_registry::type_registry() {
  metas_.emplace_back(); // slot 0 stays invalid
  add_builtins();
}

type_registry& type_registry::global() {
  static type_registry instance;
  return instance;
}

const type_meta* type_registry::by_name(std::string_view name) const noexcept {
  auto i = names_.find(std::string{name});
  return i == names_.end() ? nullptr : &metas_[i->second];
}

type_id type_registry::id_of(std::type_index native) const noexcept {
  auto i = natives_.find(native);
  return i == natives_.end() ? invalid_type_id : i->second;
}

type_id type_registry::add_impl(std::string name, std::type_index native,
                                void (*encode)(const std::any&, byte_buffer&),
                                std::any (*decode)(detail::reader&),
                                bool (*equals)(const std::any&,
                                               const std::any&)) {
  if (names_.contains(name))
    throw failure{errc::config_error, "type name already registered: " + name};
  if (natives_.contains(native))
    throw failure{errc::config_error,
                  "native type already registered as "
                    + metas_[natives_[native]].name};
  auto id = static_cast<type_id>(metas_.size());
  metas_.push_back(type_meta{id, name, native, encode, decode, equals});
  names_.emplace(std::move(name), id);
  natives_.emplace(native, id);
  return id;
}

void type_registry::add_builtins() {
  add<bool>("bool", encode_bool, decode_bool);
  add<int8_t>("i8", encode_int<int8_t, uint8_t>, decode_int<int8_t, uint8_t>);
  add<int16_t>("i16", encode_int<int16_t, uint16_t>,
               decode_int<int16_t, uint16_t>);
  add<int32_t>("i32", encode_int<int32_t, uint32_t>,
               decode_int<int32_t, uint32_t>);
  add<int64_t>("i64", encode_int<int64_t, uint64_t>,
               decode_int<int64_t, uint64_t>);
  add<uint8_t>("u8", encode_int<uint8_t, uint8_t>,
               decode_int<uint8_t, uint8_t>);
  add<uint16_t>("u16", encode_int<uint16_t, uint16_t>,
                decode_int<uint16_t, uint16_t>);
  add<uint32_t>("u32", encode_int<uint32_t, uint32_t>,
                decode_int<uint32_t, uint32_t>);
  add<uint64_t>("u64", encode_int<uint64_t, uint64_t>,
                decode_int<uint64_t, uint64_t>);
  add<float>("f32", encode_f32, decode_f32);
  add<double>("f64", encode_f64, decode_f64);
  add<std::string>("text", encode_text, decode_text);
  add<byte_buffer>("bytes", encode_bytes, decode_bytes);
  add<atom_value>("atom", encode_atom, decode_atom);
  add<actor_addr>("addr", encode_addr, decode_addr);
  add<error>("error", encode_error, decode_error);
  add<exit_reason>("exit", encode_exit, decode_exit);
}

} // namespace cafx

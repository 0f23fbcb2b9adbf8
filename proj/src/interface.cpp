#include "cafx/interface.hpp"

#include <algorithm>

#include "cafx/detail/wire.hpp"

namespace cafx {

namespace {

constexpr uint64_t constant_bit = uint64_t{1} << 63;

void put_entries(byte_buffer& out, const std::vector<type_spec>& entries) {
  detail::put_u8(out, static_cast<uint8_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.is_constant)
      detail::put_u64(out, constant_bit | static_cast<uint64_t>(e.constant));
    else
      detail::put_u64(out, e.type);
  }
}

std::vector<type_spec> get_entries(detail::reader& in) {
  auto count = in.u8();
  std::vector<type_spec> entries;
  entries.reserve(count);
  for (uint8_t i = 0; i < count; ++i) {
    auto bits = in.u64();
    if (bits & constant_bit) {
      auto v = static_cast<atom_value>(bits & ~constant_bit);
      if (!is_valid_atom_value(v))
        throw failure{errc::codec_error, "malformed atom constant entry"};
      entries.push_back(type_spec::atom_const(v));
    } else {
      if (bits == 0 || bits > 0xFFFF)
        throw failure{errc::codec_error, "malformed type entry"};
      entries.push_back(type_spec::of(static_cast<type_id>(bits)));
    }
  }
  return entries;
}

} // namespace

std::string to_string(const type_spec& spec) {
  if (spec.is_constant)
    return to_string(spec.constant);
  auto meta = type_registry::global().by_id(spec.type);
  return meta ? meta->name : "type#" + std::to_string(spec.type);
}

std::string to_string(const rule& r) {
  std::string result = "(";
  for (size_t i = 0; i < r.inputs.size(); ++i) {
    if (i > 0)
      result += ", ";
    result += to_string(r.inputs[i]);
  }
  result += ") -> (";
  for (size_t i = 0; i < r.outputs.size(); ++i) {
    if (i > 0)
      result += ", ";
    result += to_string(r.outputs[i]);
  }
  result += ")";
  if (r.alt_outputs) {
    result += " or (";
    for (size_t i = 0; i < r.alt_outputs->size(); ++i) {
      if (i > 0)
        result += ", ";
      result += to_string((*r.alt_outputs)[i]);
    }
    result += ")";
  }
  return result;
}

messaging_interface::messaging_interface(std::vector<rule> rules)
  : rules_(std::move(rules)) {
  for (const auto& r : rules_)
    if (r.inputs.empty())
      throw failure{errc::interface_conflict, "rule with empty inputs"};
  std::sort(rules_.begin(), rules_.end());
  rules_.erase(std::unique(rules_.begin(), rules_.end()), rules_.end());
  for (size_t i = 1; i < rules_.size(); ++i)
    if (rules_[i - 1].inputs == rules_[i].inputs)
      throw failure{errc::interface_conflict,
                    "duplicate input signature with different outputs: "
                      + to_string(rules_[i])};
}

bool messaging_interface::contains(const rule& r) const noexcept {
  return std::binary_search(rules_.begin(), rules_.end(), r);
}

const rule* messaging_interface::match_inputs(const message& msg) const {
  for (const auto& r : rules_) {
    if (r.inputs.size() != msg.size())
      continue;
    bool ok = true;
    for (size_t i = 0; ok && i < r.inputs.size(); ++i)
      ok = r.inputs[i].admits(msg, i);
    if (ok)
      return &r;
  }
  return nullptr;
}

byte_buffer messaging_interface::encode() const {
  byte_buffer out;
  detail::put_u16(out, static_cast<uint16_t>(rules_.size()));
  for (const auto& r : rules_) {
    put_entries(out, r.inputs);
    put_entries(out, r.outputs);
    detail::put_u8(out, r.alt_outputs ? 1 : 0);
    if (r.alt_outputs)
      put_entries(out, *r.alt_outputs);
  }
  return out;
}

messaging_interface messaging_interface::decode(byte_span bytes) {
  detail::reader in{bytes};
  auto count = in.u16();
  std::vector<rule> rules;
  rules.reserve(count);
  for (uint16_t i = 0; i < count; ++i) {
    rule r;
    r.inputs = get_entries(in);
    r.outputs = get_entries(in);
    if (in.u8() != 0)
      r.alt_outputs = get_entries(in);
    rules.push_back(std::move(r));
  }
  in.expect_done();
  return messaging_interface{std::move(rules)};
}

std::string to_string(const messaging_interface& iface) {
  std::string result = "{";
  for (size_t i = 0; i < iface.rules().size(); ++i) {
    if (i > 0)
      result += "; ";
    result += to_string(iface.rules()[i]);
  }
  result += "}";
  return result;
}

bool is_subset(const messaging_interface& x, const messaging_interface& y) {
  for (const auto& r : x.rules())
    if (!y.contains(r))
      return false;
  return true;
}

} // namespace cafx

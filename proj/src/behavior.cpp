#include "cafx/behavior.hpp"

namespace cafx {

std::optional<std::any> matcher::apply(const std::any& value) const {
  switch (kind_) {
    case matcher_kind::type_only:
      return value;
    case matcher_kind::value_guard:
      if (eq_(value))
        return value;
      return std::nullopt;
    case matcher_kind::predicate_guard:
    case matcher_kind::projection:
      return transform_(value);
  }
  return std::nullopt;
}

bool matcher::check(const message& msg, size_t index,
                    std::optional<std::any>& transformed) const {
  if (msg.type_at(index) != entry_.type)
    return false;
  switch (kind_) {
    case matcher_kind::type_only:
      return true;
    case matcher_kind::value_guard:
      return eq_(msg.get_any(index));
    case matcher_kind::predicate_guard:
    case matcher_kind::projection: {
      auto result = transform_(msg.get_any(index));
      if (!result)
        return false;
      transformed = std::move(result);
      return true;
    }
  }
  return false;
}

std::optional<std::optional<message>>
match_case::try_invoke(message& msg, transform_slots& slots) const {
  if (kind_ == case_kind::catch_all) {
    auto response = invoke_(msg, slots);
    return std::optional<std::optional<message>>{std::move(response)};
  }
  if (pattern_.size() != msg.size())
    return std::nullopt;
  if (slots.size() < msg.size())
    slots.resize(msg.size());
  for (size_t i = 0; i < pattern_.size(); ++i) {
    slots[i].reset();
    if (!pattern_[i].check(msg, i, slots[i]))
      return std::nullopt;
  }
  return std::optional<std::optional<message>>{invoke_(msg, slots)};
}

match_outcome match(const behavior& bhvr, message& msg) {
  transform_slots slots;
  return match(bhvr, msg, slots);
}

match_outcome match(const behavior& bhvr, message& msg,
                    transform_slots& slots) {
  for (const auto& mc : bhvr.cases()) {
    auto result = mc.try_invoke(msg, slots);
    if (result)
      return {true, std::move(*result)};
  }
  return {false, std::nullopt};
}

std::optional<messaging_interface> derive_interface(const behavior& bhvr) {
  std::vector<rule> rules;
  for (const auto& mc : bhvr.cases()) {
    if (mc.kind() == match_case::case_kind::catch_all || mc.dynamic_output())
      return std::nullopt;
    rule r;
    r.inputs.reserve(mc.pattern().size());
    for (const auto& m : mc.pattern())
      r.inputs.push_back(m.entry());
    r.outputs = mc.outputs();
    rules.push_back(std::move(r));
  }
  return messaging_interface{std::move(rules)};
}

} // namespace cafx

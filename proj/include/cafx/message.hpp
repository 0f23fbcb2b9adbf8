#pragma once

#include <any>
#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cafx/atom.hpp"
#include "cafx/bytes.hpp"
#include "cafx/error.hpp"
#include "cafx/ref_counted.hpp"
#include "cafx/type_registry.hpp"

namespace cafx {

/// Process-wide counters for the copy-on-write machinery; used to assert
/// sharing behavior in tests. Counters only ever grow.
struct copy_stats {
  struct snapshot {
    uint64_t deep_copies = 0;
    uint64_t shares = 0;
  };

  static snapshot now() noexcept;
  static void note_deep_copy() noexcept;
  static void note_share() noexcept;
};

namespace detail {

template <class T>
struct storage_sel {
  using type = T;
};

template <>
struct storage_sel<const char*> {
  using type = std::string;
};

template <>
struct storage_sel<char*> {
  using type = std::string;
};

template <>
struct storage_sel<std::string_view> {
  using type = std::string;
};

template <atom_value V>
struct storage_sel<atom_constant<V>> {
  using type = atom_value;
};

/// Maps an argument type to the type actually stored in a message.
template <class T>
using storage_t = typename storage_sel<std::decay_t<T>>::type;

} // namespace detail

/// Shared payload of a message: a flat tuple of typed elements.
class message_data : public ref_counted {
public:
  struct element {
    type_id type;
    std::any value;
  };

  message_data() = default;

  explicit message_data(std::vector<element> elems)
    : elements(std::move(elems)) {
    // nop
  }

  message_data(const message_data& other) = default;

  std::vector<element> elements;
};

/// Reference-counted, copy-on-write tuple of typed values. Copying a
/// message shares the payload; mutable access privatizes it first, so no
/// holder ever observes a foreign mutation.
class message {
public:
  message() = default;

  message(const message& other) noexcept : data_(other.data_) {
    if (data_)
      copy_stats::note_share();
  }

  message(message&&) noexcept = default;

  message& operator=(const message& other) noexcept {
    message tmp{other};
    data_.swap(tmp.data_);
    return *this;
  }

  message& operator=(message&&) noexcept = default;

  explicit message(intrusive_ptr<message_data> data) noexcept
    : data_(std::move(data)) {
    // nop
  }

  size_t size() const noexcept {
    return data_ ? data_->elements.size() : 0;
  }

  bool empty() const noexcept {
    return size() == 0;
  }

  type_id type_at(size_t index) const {
    check_index(index);
    return data_->elements[index].type;
  }

  std::vector<type_id> signature() const {
    std::vector<type_id> result;
    result.reserve(size());
    if (data_)
      for (const auto& e : data_->elements)
        result.push_back(e.type);
    return result;
  }

  /// Read-only access; never copies the payload.
  const std::any& get_any(size_t index) const {
    check_index(index);
    return data_->elements[index].value;
  }

  /// Mutable access; deep-copies the payload first if it is shared.
  std::any& get_mutable_any(size_t index) {
    check_index(index);
    privatize();
    return data_->elements[index].value;
  }

  template <class T>
  const T& get(size_t index) const {
    auto ptr = std::any_cast<T>(&get_any(index));
    if (!ptr)
      throw failure{errc::type_mismatch,
                    "message element holds a different type"};
    return *ptr;
  }

  template <class T>
  T& get_mutable(size_t index) {
    auto ptr = std::any_cast<T>(&get_mutable_any(index));
    if (!ptr)
      throw failure{errc::type_mismatch,
                    "message element holds a different type"};
    return *ptr;
  }

  /// Number of handles currently sharing the payload (test plumbing).
  size_t data_ref_count() const noexcept {
    return data_ ? data_->ref_count() : 0;
  }

private:
  void check_index(size_t index) const {
    if (index >= size())
      throw failure{errc::out_of_range, "message index out of range"};
  }

  void privatize() {
    if (data_ && !data_->unique()) {
      data_.reset(new message_data(*data_), false);
      copy_stats::note_deep_copy();
    }
  }

  intrusive_ptr<message_data> data_;
};

namespace detail {

template <class T>
message_data::element make_element(const type_registry& reg, T&& value) {
  using storage = storage_t<T>;
  auto id = reg.id_of<storage>();
  if (id == invalid_type_id)
    throw failure{errc::unknown_type,
                  std::string{"unregistered message element type: "}
                    + typeid(storage).name()};
  return {id, std::any{storage(std::forward<T>(value))}};
}

} // namespace detail

/// Builds a message over the given registry; every value type must be
/// registered there.
template <class... Ts>
message make_message_with(const type_registry& reg, Ts&&... values) {
  if constexpr (sizeof...(Ts) == 0) {
    return message{};
  } else {
    std::vector<message_data::element> elems;
    elems.reserve(sizeof...(Ts));
    (elems.push_back(detail::make_element(reg, std::forward<Ts>(values))),
     ...);
    return message{make_counted<message_data>(std::move(elems))};
  }
}

template <class... Ts>
message make_message(Ts&&... values) {
  return make_message_with(type_registry::global(), std::forward<Ts>(values)...);
}

/// Element-wise equality; elements without a registered equality
/// predicate never compare equal.
bool element_wise_equal(const message& lhs, const message& rhs,
                        const type_registry& reg = type_registry::global());

inline bool operator==(const message& lhs, const message& rhs) {
  return element_wise_equal(lhs, rhs);
}

/// Encodes a message as: 2-byte arity, then per element a 2-byte type id,
/// a 4-byte payload length and the payload bytes. All integers big-endian.
byte_buffer serialize(const message& msg,
                      const type_registry& reg = type_registry::global());

message deserialize(byte_span bytes,
                    const type_registry& reg = type_registry::global());

std::string to_string(const message& msg);

} // namespace cafx

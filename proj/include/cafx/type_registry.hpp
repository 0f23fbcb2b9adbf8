#pragma once

#include <any>
#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>
#include <typeindex>
#include <unordered_map>
#include <vector>

#include "cafx/bytes.hpp"
#include "cafx/detail/wire.hpp"
#include "cafx/error.hpp"

namespace cafx {

/// Small integer identifying a message element type. Id 0 is invalid.
using type_id = uint16_t;

inline constexpr type_id invalid_type_id = 0;

/// Fixed ids for builtin types, assigned in declaration order.
namespace builtin {

inline constexpr type_id boolean = 1;
inline constexpr type_id i8 = 2;
inline constexpr type_id i16 = 3;
inline constexpr type_id i32 = 4;
inline constexpr type_id i64 = 5;
inline constexpr type_id u8 = 6;
inline constexpr type_id u16 = 7;
inline constexpr type_id u32 = 8;
inline constexpr type_id u64 = 9;
inline constexpr type_id f32 = 10;
inline constexpr type_id f64 = 11;
inline constexpr type_id text = 12;
inline constexpr type_id bytes = 13;
inline constexpr type_id atom = 14;
inline constexpr type_id addr = 15;
// Runtime plumbing types, stable but outside the builtin block.
inline constexpr type_id error = 16;
inline constexpr type_id exit = 17;

} // namespace builtin

/// Runtime description of one registered type.
struct type_meta {
  type_id id = invalid_type_id;
  std::string name;
  std::type_index native = std::type_index{typeid(void)};
  /// Appends the wire payload of `value`; null for local-only types.
  void (*encode)(const std::any& value, byte_buffer& out) = nullptr;
  /// Decodes one payload; consumes the whole span or throws.
  std::any (*decode)(detail::reader& in) = nullptr;
  /// Value equality; null when the native type lacks operator==.
  bool (*equals)(const std::any& lhs, const std::any& rhs) = nullptr;
};

/// Bijective name <-> id mapping for all types a runtime instance can put
/// into messages. Registration must finish before concurrent use; lookups
/// are const and thread-safe afterwards.
class type_registry {
public:
  type_registry();

  type_registry(const type_registry&) = delete;
  type_registry& operator=(const type_registry&) = delete;

  /// The process-wide default registry.
  static type_registry& global();

  /// Registers T under `name` with an optional wire codec.
  template <class T>
  type_id add(std::string name,
              void (*encode)(const std::any&, byte_buffer&) = nullptr,
              std::any (*decode)(detail::reader&) = nullptr) {
    return add_impl(std::move(name), std::type_index{typeid(T)}, encode,
                    decode, make_equals<T>());
  }

  const type_meta* by_id(type_id id) const noexcept {
    if (id == invalid_type_id || id >= metas_.size())
      return nullptr;
    return &metas_[id];
  }

  const type_meta* by_name(std::string_view name) const noexcept;

  /// Id of the registered native type T, or invalid_type_id.
  template <class T>
  type_id id_of() const noexcept {
    return id_of(std::type_index{typeid(T)});
  }

  type_id id_of(std::type_index native) const noexcept;

  size_t size() const noexcept {
    return metas_.size() - 1;
  }

private:
  template <class T>
  static bool (*make_equals())(const std::any&, const std::any&) {
    if constexpr (std::equality_comparable<T>) {
      return +[](const std::any& lhs, const std::any& rhs) {
        return *std::any_cast<T>(&lhs) == *std::any_cast<T>(&rhs);
      };
    } else {
      return nullptr;
    }
  }

  type_id add_impl(std::string name, std::type_index native,
                   void (*encode)(const std::any&, byte_buffer&),
                   std::any (*decode)(detail::reader&),
                   bool (*equals)(const std::any&, const std::any&));

  void add_builtins();

  std::vector<type_meta> metas_; // index == id; slot 0 unused
  std::unordered_map<std::string, type_id> names_;
  std::unordered_map<std::type_index, type_id> natives_;
};

} // namespace cafx

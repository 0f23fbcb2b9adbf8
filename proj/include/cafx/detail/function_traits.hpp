#pragma once

#include <cstddef>
#include <optional>
#include <type_traits>

namespace cafx::detail {

template <class... Ts>
struct type_list {};

template <class F>
struct callable_traits : callable_traits<decltype(&F::operator())> {};

template <class C, class R, class... As>
struct callable_traits<R (C::*)(As...) const> {
  using result = R;
  using args = type_list<As...>;
  static constexpr size_t arity = sizeof...(As);
};

template <class C, class R, class... As>
struct callable_traits<R (C::*)(As...)>
  : callable_traits<R (C::*)(As...) const> {};

template <class R, class... As>
struct callable_traits<R (*)(As...)> {
  using result = R;
  using args = type_list<As...>;
  static constexpr size_t arity = sizeof...(As);
};

template <class R, class... As>
struct callable_traits<R (&)(As...)> : callable_traits<R (*)(As...)> {};

template <class T>
struct optional_inner {
  using type = void;
};

template <class U>
struct optional_inner<std::optional<U>> {
  using type = U;
};

template <class T>
using optional_inner_t = typename optional_inner<T>::type;

template <class T>
inline constexpr bool is_optional_v = !std::is_void_v<optional_inner_t<T>>;

/// True for non-const lvalue reference parameters, i.e. arguments a
/// handler wants to mutate in place.
template <class A>
inline constexpr bool is_mutable_ref_v =
  std::is_lvalue_reference_v<A>
  && !std::is_const_v<std::remove_reference_t<A>>;

} // namespace cafx::detail

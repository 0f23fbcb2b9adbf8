#pragma once

#include <any>
#include <functional>
#include <memory>
#include <optional>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "cafx/atom.hpp"
#include "cafx/detail/function_traits.hpp"
#include "cafx/interface.hpp"
#include "cafx/message.hpp"

namespace cafx {

namespace detail {

template <class T>
struct is_atom_constant : std::false_type {};

template <atom_value V>
struct is_atom_constant<atom_constant<V>> : std::true_type {};

template <class T>
inline constexpr bool is_atom_constant_v = is_atom_constant<T>::value;

template <class T>
struct is_tuple : std::false_type {};

template <class... Ts>
struct is_tuple<std::tuple<Ts...>> : std::true_type {};

} // namespace detail

enum class arg_intent : uint8_t { read_only, mutable_access };

/// One pattern element. Either matches a type, one exact value, or runs a
/// guard/projection function over the element.
class matcher {
public:
  enum class matcher_kind : uint8_t {
    type_only,
    value_guard,
    predicate_guard,
    projection,
  };

  matcher_kind kind() const noexcept {
    return kind_;
  }

  /// Element type this matcher requires.
  type_id input() const noexcept {
    return entry_.type;
  }

  /// Entry reported to interface derivation.
  const type_spec& entry() const noexcept {
    return entry_;
  }

  static matcher type_only(type_id t) {
    matcher m;
    m.kind_ = matcher_kind::type_only;
    m.entry_ = type_spec::of(t);
    return m;
  }

  static matcher atom_guard(atom_value v) {
    matcher m;
    m.kind_ = matcher_kind::value_guard;
    m.entry_ = type_spec::atom_const(v);
    m.eq_ = [v](const std::any& x) {
      auto p = std::any_cast<atom_value>(&x);
      return p != nullptr && *p == v;
    };
    return m;
  }

  template <class T>
  static matcher value_guard(T value) {
    if constexpr (detail::is_atom_constant_v<T>) {
      return atom_guard(T::raw);
    } else if constexpr (std::is_same_v<T, atom_value>) {
      return atom_guard(value);
    } else {
      using storage = detail::storage_t<T>;
      matcher m;
      m.kind_ = matcher_kind::value_guard;
      m.entry_ = type_spec::of(required_id<storage>());
      m.eq_ = [v = storage(std::move(value))](const std::any& x) {
        auto p = std::any_cast<storage>(&x);
        return p != nullptr && *p == v;
      };
      return m;
    }
  }

  /// Wraps a typed `T -> optional<U>` function; a guard when U == T, a
  /// projection otherwise.
  template <class In, class Out, class G>
  static matcher transforming(G g) {
    matcher m;
    m.kind_ = std::is_same_v<In, Out> ? matcher_kind::predicate_guard
                                      : matcher_kind::projection;
    m.entry_ = type_spec::of(required_id<In>());
    m.transform_ = [g = std::move(g)](const std::any& x) -> std::optional<std::any> {
      auto r = g(*std::any_cast<In>(&x));
      if (!r)
        return std::nullopt;
      return std::any{std::move(*r)};
    };
    return m;
  }

  /// Applies this matcher to a raw value: returns the (possibly
  /// transformed) value on a match and nullopt otherwise.
  std::optional<std::any> apply(const std::any& value) const;

  /// Checks element `index` of `msg`; stores the transformed value for
  /// guard/projection matchers.
  bool check(const message& msg, size_t index,
             std::optional<std::any>& transformed) const;

private:
  template <class T>
  static type_id required_id() {
    auto id = type_registry::global().id_of<T>();
    if (id == invalid_type_id)
      throw failure{errc::unknown_type,
                    std::string{"unregistered type in pattern: "}
                      + typeid(T).name()};
    return id;
  }

  matcher_kind kind_ = matcher_kind::type_only;
  type_spec entry_;
  std::function<bool(const std::any&)> eq_;
  std::function<std::optional<std::any>(const std::any&)> transform_;
};

/// Lifts a value into a guard that matches exactly that value.
template <class T>
matcher to_guard(T value) {
  return matcher::value_guard(std::move(value));
}

using transform_slots = std::vector<std::optional<std::any>>;

/// One case of a behavior: a pattern, the per-argument access intents and
/// the callback, plus the derived output signature.
class match_case {
public:
  enum class case_kind : uint8_t { trivial, advanced, catch_all };

  using invoker_fn =
    std::function<std::optional<message>(message&, transform_slots&)>;

  match_case(case_kind kind, std::vector<matcher> pattern,
             std::vector<arg_intent> intents, std::vector<type_spec> outputs,
             bool dynamic_output, bool needs_transforms, invoker_fn invoke)
    : kind_(kind),
      pattern_(std::move(pattern)),
      intents_(std::move(intents)),
      outputs_(std::move(outputs)),
      dynamic_output_(dynamic_output),
      needs_transforms_(needs_transforms),
      invoke_(std::move(invoke)) {
    // nop
  }

  /// Builds a trivial case: the pattern derives from the callback's
  /// argument types.
  template <class F>
    requires(!std::is_same_v<std::decay_t<F>, match_case>
             && requires { &std::decay_t<F>::operator(); })
  match_case(F f);

  case_kind kind() const noexcept {
    return kind_;
  }

  const std::vector<matcher>& pattern() const noexcept {
    return pattern_;
  }

  const std::vector<arg_intent>& arg_intents() const noexcept {
    return intents_;
  }

  const std::vector<type_spec>& outputs() const noexcept {
    return outputs_;
  }

  bool dynamic_output() const noexcept {
    return dynamic_output_;
  }

  /// Tries this case against `msg`; on a match returns the optional
  /// response message wrapped in an engaged optional-of-optional.
  std::optional<std::optional<message>> try_invoke(message& msg,
                                                   transform_slots& slots) const;

private:
  case_kind kind_;
  std::vector<matcher> pattern_;
  std::vector<arg_intent> intents_;
  std::vector<type_spec> outputs_;
  bool dynamic_output_ = false;
  bool needs_transforms_ = false;
  invoker_fn invoke_;
};

namespace detail {

template <class T>
type_spec spec_of() {
  if constexpr (is_atom_constant_v<T>) {
    return type_spec::atom_const(T::raw);
  } else {
    using storage = storage_t<T>;
    auto id = type_registry::global().id_of<storage>();
    if (id == invalid_type_id)
      throw failure{errc::unknown_type,
                    std::string{"unregistered type in signature: "}
                      + typeid(storage).name()};
    return type_spec::of(id);
  }
}

template <class R>
std::vector<type_spec> output_specs() {
  if constexpr (std::is_void_v<R>) {
    return {};
  } else if constexpr (is_tuple<std::decay_t<R>>::value) {
    return []<class... Ts>(std::type_identity<std::tuple<Ts...>>) {
      return std::vector<type_spec>{spec_of<std::decay_t<Ts>>()...};
    }(std::type_identity<std::decay_t<R>>{});
  } else if constexpr (std::is_same_v<std::decay_t<R>, message>) {
    return {};
  } else {
    return {spec_of<std::decay_t<R>>()};
  }
}

template <class R>
constexpr bool dynamic_output_v = std::is_same_v<std::decay_t<R>, message>;

/// Packs a callback result into a response message.
template <class R>
std::optional<message> pack_response(R&& value) {
  using D = std::decay_t<R>;
  if constexpr (std::is_same_v<D, message>) {
    return std::forward<R>(value);
  } else if constexpr (is_tuple<D>::value) {
    return std::apply(
      [](auto&&... xs) {
        return make_message(std::forward<decltype(xs)>(xs)...);
      },
      std::forward<R>(value));
  } else {
    return make_message(std::forward<R>(value));
  }
}

/// Reads argument `I` for a handler parameter declared as `A` directly
/// from the message.
template <class A>
decltype(auto) extract_direct(message& msg, size_t index) {
  using D = std::decay_t<A>;
  if constexpr (is_atom_constant_v<D>) {
    return D{};
  } else {
    using S = storage_t<D>;
    if constexpr (is_mutable_ref_v<A>)
      return msg.get_mutable<S>(index);
    else
      return msg.get<S>(index);
  }
}

template <class A>
constexpr arg_intent intent_of() {
  return is_mutable_ref_v<A> ? arg_intent::mutable_access
                             : arg_intent::read_only;
}

template <class F, class... As, size_t... Is>
match_case::invoker_fn make_trivial_invoker(F f, type_list<As...>,
                                            std::index_sequence<Is...>) {
  return [f = std::move(f)](message& msg,
                            transform_slots&) -> std::optional<message> {
    using R = decltype(f(extract_direct<As>(msg, Is)...));
    if constexpr (std::is_void_v<R>) {
      f(extract_direct<As>(msg, Is)...);
      return std::nullopt;
    } else {
      return pack_response(f(extract_direct<As>(msg, Is)...));
    }
  };
}

template <class F, class... As>
match_case make_trivial_case(F f, type_list<As...> args) {
  std::vector<matcher> pattern;
  std::vector<arg_intent> intents{intent_of<As>()...};
  (pattern.push_back([] {
    using D = std::decay_t<As>;
    if constexpr (is_atom_constant_v<D>)
      return matcher::atom_guard(D::raw);
    else
      return matcher::type_only(spec_of<D>().type);
  }()),
   ...);
  using R = typename callable_traits<F>::result;
  auto invoke = make_trivial_invoker(std::move(f), args,
                                     std::index_sequence_for<As...>{});
  return match_case{match_case::case_kind::trivial,
                    std::move(pattern),
                    std::move(intents),
                    output_specs<R>(),
                    dynamic_output_v<R>,
                    false,
                    std::move(invoke)};
}

// -- advanced cases (the on(...) builder) -----------------------------------

template <class X, class A0, class R>
struct fn_slot {
  using in_t = std::decay_t<A0>;
  static_assert(is_optional_v<R>,
                "guards and projections must return std::optional");
  using out_t = optional_inner_t<R>;
  static constexpr bool transforming = true;
};

template <class X>
struct slot_select {
  static constexpr bool transforming = false;
  using in_t = storage_t<X>;
  using out_t = storage_t<X>;
};

template <class X>
  requires requires { &X::operator(); }
struct slot_select<X> {
  using traits = callable_traits<X>;
  template <class... As>
  static auto probe(type_list<As...>)
    -> fn_slot<X, std::tuple_element_t<0, std::tuple<As...>>,
               typename traits::result>;
  using picked = decltype(probe(typename traits::args{}));
  static constexpr bool transforming = true;
  using in_t = typename picked::in_t;
  using out_t = typename picked::out_t;
};

template <class X>
matcher make_slot_matcher(X x) {
  if constexpr (slot_select<X>::transforming) {
    using in_t = typename slot_select<X>::in_t;
    using out_t = typename slot_select<X>::out_t;
    return matcher::transforming<in_t, out_t>(std::move(x));
  } else {
    return matcher::value_guard(std::move(x));
  }
}

/// Reads argument `I` for an advanced case: transformed slots come from
/// the guard/projection results, value slots read the message directly.
template <class X, class A>
decltype(auto) extract_slot(message& msg, size_t index,
                            transform_slots& slots) {
  if constexpr (slot_select<X>::transforming) {
    using out_t = typename slot_select<X>::out_t;
    static_assert(
      std::is_same_v<std::decay_t<A>, out_t>,
      "handler argument must take the guard/projection result type");
    return std::any_cast<out_t&>(*slots[index]);
  } else {
    return extract_direct<A>(msg, index);
  }
}

template <class F, class... Xs, class... As, size_t... Is>
match_case::invoker_fn make_advanced_invoker(F f, type_list<Xs...>,
                                             type_list<As...>,
                                             std::index_sequence<Is...>) {
  return [f = std::move(f)](message& msg,
                            transform_slots& slots) -> std::optional<message> {
    using R = decltype(f(extract_slot<Xs, As>(msg, Is, slots)...));
    if constexpr (std::is_void_v<R>) {
      f(extract_slot<Xs, As>(msg, Is, slots)...);
      return std::nullopt;
    } else {
      return pack_response(f(extract_slot<Xs, As>(msg, Is, slots)...));
    }
  };
}

} // namespace detail

template <class F>
  requires(!std::is_same_v<std::decay_t<F>, match_case>
           && requires { &std::decay_t<F>::operator(); })
match_case::match_case(F f)
  : match_case(detail::make_trivial_case(
      std::move(f), typename detail::callable_traits<F>::args{})) {
  // nop
}

/// Builder returned by on(); `>>` attaches the callback.
template <class... Xs>
class case_builder {
public:
  explicit case_builder(Xs... xs) : slots_(std::move(xs)...) {
    // nop
  }

  template <class F>
  match_case operator>>(F f) && {
    using traits = detail::callable_traits<F>;
    static_assert(traits::arity == sizeof...(Xs),
                  "callback arity must equal the pattern arity");
    return build(std::move(f), typename traits::args{},
                 std::index_sequence_for<Xs...>{});
  }

private:
  template <class F, class... As, size_t... Is>
  match_case build(F f, detail::type_list<As...> args,
                   std::index_sequence<Is...>) {
    std::vector<matcher> pattern;
    (pattern.push_back(detail::make_slot_matcher(std::get<Is>(slots_))), ...);
    std::vector<arg_intent> intents{detail::intent_of<As>()...};
    using R = typename detail::callable_traits<F>::result;
    bool needs_transforms =
      (detail::slot_select<Xs>::transforming || ...);
    auto invoke = detail::make_advanced_invoker(
      std::move(f), detail::type_list<Xs...>{}, args,
      std::index_sequence_for<As...>{});
    return match_case{match_case::case_kind::advanced,
                      std::move(pattern),
                      std::move(intents),
                      detail::output_specs<R>(),
                      detail::dynamic_output_v<R>,
                      needs_transforms,
                      std::move(invoke)};
  }

  std::tuple<Xs...> slots_;
};

/// Starts an advanced match case from guards, projections and values.
template <class... Xs>
case_builder<std::decay_t<Xs>...> on(Xs&&... xs) {
  return case_builder<std::decay_t<Xs>...>{std::forward<Xs>(xs)...};
}

/// Tag for the catch-all case: `others >> [] { ... }`.
struct others_t {
  template <class F>
  match_case operator>>(F f) const {
    static_assert(detail::callable_traits<F>::arity == 0,
                  "the catch-all callback takes no arguments");
    return match_case{match_case::case_kind::catch_all,
                      {},
                      {},
                      {},
                      false,
                      false,
                      [f = std::move(f)](message&, transform_slots&)
                        -> std::optional<message> {
                        f();
                        return std::nullopt;
                      }};
  }
};

inline constexpr others_t others{};

/// Result of matching one message against a behavior.
struct match_outcome {
  bool matched = false;
  std::optional<message> response;
};

/// Immutable, shareable ordered list of match cases; the first matching
/// case wins.
class behavior {
public:
  behavior() = default;

  behavior(std::initializer_list<match_case> cases)
    : cases_(std::make_shared<std::vector<match_case>>(cases)) {
    // nop
  }

  explicit behavior(std::vector<match_case> cases)
    : cases_(std::make_shared<std::vector<match_case>>(std::move(cases))) {
    // nop
  }

  bool defined() const noexcept {
    return cases_ != nullptr && !cases_->empty();
  }

  const std::vector<match_case>& cases() const noexcept {
    static const std::vector<match_case> none;
    return cases_ ? *cases_ : none;
  }

private:
  std::shared_ptr<const std::vector<match_case>> cases_;
};

/// Tries the cases of `bhvr` in order against `msg`.
match_outcome match(const behavior& bhvr, message& msg);

/// Same, but reuses a scratch buffer for guard/projection results.
match_outcome match(const behavior& bhvr, message& msg,
                    transform_slots& slots);

/// Derives the messaging interface of a behavior; a behavior containing a
/// catch-all (or an untypable response) is dynamic and yields nullopt.
/// Throws interface_conflict when two cases share inputs but disagree on
/// outputs.
std::optional<messaging_interface> derive_interface(const behavior& bhvr);

} // namespace cafx

#pragma once

#include <atomic>
#include <cstddef>
#include <utility>

namespace cafx {

/// Base class for objects with an intrusive, atomic reference count.
/// Freshly constructed objects start with a count of one.
class ref_counted {
public:
  ref_counted() noexcept : rc_(1) {
    // nop
  }

  ref_counted(const ref_counted&) noexcept : rc_(1) {
    // the count belongs to the object identity, not its value
  }

  ref_counted& operator=(const ref_counted&) noexcept {
    return *this;
  }

  virtual ~ref_counted();

  void ref() const noexcept {
    rc_.fetch_add(1, std::memory_order_relaxed);
  }

  void deref() const noexcept {
    if (rc_.fetch_sub(1, std::memory_order_acq_rel) == 1)
      delete this;
  }

  size_t ref_count() const noexcept {
    return rc_.load(std::memory_order_acquire);
  }

  bool unique() const noexcept {
    return ref_count() == 1;
  }

private:
  mutable std::atomic<size_t> rc_;
};

/// Smart pointer for ref_counted objects.
template <class T>
class intrusive_ptr {
public:
  constexpr intrusive_ptr() noexcept = default;

  constexpr intrusive_ptr(std::nullptr_t) noexcept {
    // nop
  }

  /// Takes ownership of `raw` without touching the count when `add_ref`
  /// is false, i.e. adopts the initial reference.
  intrusive_ptr(T* raw, bool add_ref = true) noexcept : ptr_(raw) {
    if (ptr_ && add_ref)
      ptr_->ref();
  }

  intrusive_ptr(const intrusive_ptr& other) noexcept : ptr_(other.ptr_) {
    if (ptr_)
      ptr_->ref();
  }

  intrusive_ptr(intrusive_ptr&& other) noexcept
    : ptr_(std::exchange(other.ptr_, nullptr)) {
    // nop
  }

  template <class U>
    requires std::is_convertible_v<U*, T*>
  intrusive_ptr(intrusive_ptr<U> other) noexcept
    : ptr_(other.release()) {
    // nop
  }

  ~intrusive_ptr() {
    if (ptr_)
      ptr_->deref();
  }

  intrusive_ptr& operator=(intrusive_ptr other) noexcept {
    swap(other);
    return *this;
  }

  void swap(intrusive_ptr& other) noexcept {
    std::swap(ptr_, other.ptr_);
  }

  void reset(T* raw = nullptr, bool add_ref = true) noexcept {
    intrusive_ptr tmp{raw, add_ref};
    swap(tmp);
  }

  /// Releases ownership without decrementing the count.
  T* release() noexcept {
    return std::exchange(ptr_, nullptr);
  }

  T* get() const noexcept {
    return ptr_;
  }

  T& operator*() const noexcept {
    return *ptr_;
  }

  T* operator->() const noexcept {
    return ptr_;
  }

  explicit operator bool() const noexcept {
    return ptr_ != nullptr;
  }

  bool operator==(const intrusive_ptr&) const = default;

  bool operator==(std::nullptr_t) const noexcept {
    return ptr_ == nullptr;
  }

private:
  T* ptr_ = nullptr;
};

template <class T, class... Ts>
intrusive_ptr<T> make_counted(Ts&&... args) {
  return intrusive_ptr<T>{new T(std::forward<Ts>(args)...), false};
}

} // namespace cafx

#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace tbft {

// Minimal stand-in for std::expected, which this toolchain lacks.
template <typename E>
struct Unexpected {
  E error;
};

template <typename E>
Unexpected<E> unexpected(E e) {
  return Unexpected<E>{std::move(e)};
}

template <typename T, typename E>
class Expected {
 public:
  Expected(T value) : state_(std::in_place_index<0>, std::move(value)) {}
  Expected(Unexpected<E> err) : state_(std::in_place_index<1>, std::move(err.error)) {}

  bool has_value() const { return state_.index() == 0; }
  explicit operator bool() const { return has_value(); }

  T& value() & {
    if (!has_value()) throw std::logic_error("Expected: no value");
    return std::get<0>(state_);
  }
  const T& value() const& {
    if (!has_value()) throw std::logic_error("Expected: no value");
    return std::get<0>(state_);
  }
  T&& value() && {
    if (!has_value()) throw std::logic_error("Expected: no value");
    return std::get<0>(std::move(state_));
  }
  const E& error() const {
    if (has_value()) throw std::logic_error("Expected: no error");
    return std::get<1>(state_);
  }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, E> state_;
};

struct Ok {};

template <typename E>
using Status = Expected<Ok, E>;

}  // namespace tbft

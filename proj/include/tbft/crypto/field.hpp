#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace tbft::crypto {

class Prg;

__extension__ typedef unsigned __int128 u128;

// Element of GF(p), p = 2^127 - 1.
class Fp {
 public:
  static constexpr u128 kModulus = (u128{1} << 127) - 1;

  constexpr Fp() = default;
  explicit Fp(u128 v) : v_(reduce(v)) {}
  static Fp from_u64(std::uint64_t v) { return Fp(u128{v}); }

  u128 value() const { return v_; }
  bool is_zero() const { return v_ == 0; }

  friend Fp operator+(Fp a, Fp b);
  friend Fp operator-(Fp a, Fp b);
  friend Fp operator*(Fp a, Fp b);
  Fp& operator+=(Fp b) { return *this = *this + b; }
  Fp& operator-=(Fp b) { return *this = *this - b; }
  Fp& operator*=(Fp b) { return *this = *this * b; }
  friend bool operator==(Fp a, Fp b) { return a.v_ == b.v_; }

  Fp pow(u128 e) const;
  // Throws std::domain_error for zero.
  Fp inverse() const;

  // 16-byte big-endian encoding.
  std::array<std::uint8_t, 16> to_bytes() const;
  static Fp from_bytes(const std::array<std::uint8_t, 16>& b);
  std::string to_string() const;

  static Fp random(Prg& rng);
  static Fp random_nonzero(Prg& rng);

 private:
  static u128 reduce(u128 v);
  u128 v_ = 0;
};

}  // namespace tbft::crypto

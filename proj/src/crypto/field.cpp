#include "tbft/crypto/field.hpp"

#include <stdexcept>

#include "tbft/crypto/prg.hpp"

namespace tbft::crypto {

u128 Fp::reduce(u128 v) {
  v = (v & kModulus) + (v >> 127);
  if (v >= kModulus) v -= kModulus;
  return v;
}

Fp operator+(Fp a, Fp b) {
  // Both < 2^127, so the sum fits.
  Fp r;
  r.v_ = Fp::reduce(a.v_ + b.v_);
  return r;
}

Fp operator-(Fp a, Fp b) {
  Fp r;
  r.v_ = a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + (Fp::kModulus - b.v_);
  return r;
}

Fp operator*(Fp a, Fp b) {
  using u64 = std::uint64_t;
  const u64 a0 = static_cast<u64>(a.v_), a1 = static_cast<u64>(a.v_ >> 64);
  const u64 b0 = static_cast<u64>(b.v_), b1 = static_cast<u64>(b.v_ >> 64);
  const u128 p00 = u128{a0} * b0;
  const u128 mid = u128{a0} * b1 + u128{a1} * b0;
  const u128 p11 = u128{a1} * b1;
  const u128 lo = p00 + (mid << 64);
  const u128 carry = lo < p00 ? 1 : 0;
  const u128 hi = p11 + (mid >> 64) + carry;
  // 2^127 == 1 (mod p): x = hi*2^128 + lo == 2*hi + (lo >> 127) + (lo & p).
  const u128 folded = (hi << 1) + (lo >> 127) + (lo & Fp::kModulus);
  Fp r;
  r.v_ = Fp::reduce(folded);
  return r;
}

Fp Fp::pow(u128 e) const {
  Fp result(1), base = *this;
  while (e != 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

Fp Fp::inverse() const {
  if (is_zero()) throw std::domain_error("Fp: inverse of zero");
  return pow(kModulus - 2);
}

std::array<std::uint8_t, 16> Fp::to_bytes() const {
  std::array<std::uint8_t, 16> out{};
  u128 v = v_;
  for (int i = 15; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
  return out;
}

Fp Fp::from_bytes(const std::array<std::uint8_t, 16>& b) {
  u128 v = 0;
  for (auto x : b) v = (v << 8) | x;
  return Fp(v);
}

std::string Fp::to_string() const {
  if (v_ == 0) return "0";
  std::string s;
  u128 v = v_;
  while (v != 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

Fp Fp::random(Prg& rng) {
  for (;;) {
    u128 v = rng.next128() >> 1;
    if (v < kModulus) return Fp(v);
  }
}

Fp Fp::random_nonzero(Prg& rng) {
  for (;;) {
    Fp v = random(rng);
    if (!v.is_zero()) return v;
  }
}

}  // namespace tbft::crypto

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "tbft/common/bytes.hpp"
#include "tbft/crypto/field.hpp"
#include "tbft/crypto/hash.hpp"

namespace tbft::crypto {

// SHA-256 in counter mode. Output block i is SHA-256(SHA-256(seed) || be64(i)).
class Prg {
 public:
  explicit Prg(ByteView seed);
  static Prg from_seed(std::uint64_t seed, std::string_view domain);

  std::uint64_t next64();
  u128 next128();
  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  // Uniform in [0, bound). bound must be nonzero.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform in [0, 1).
  double unit();
  bool chance(double p) { return unit() < p; }
  // Independent child stream.
  Prg fork(std::string_view label);

 private:
  void refill();

  Digest key_;
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 32> buf_{};
  std::size_t pos_ = 32;
};

}  // namespace tbft::crypto

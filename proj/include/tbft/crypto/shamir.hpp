#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tbft/crypto/field.hpp"

namespace tbft::crypto {

class Prg;

struct Share {
  std::uint32_t index = 0;  // evaluation point, 1..n
  Fp value;
  friend bool operator==(const Share&, const Share&) = default;
};

class ShareError : public std::invalid_argument {
 public:
  enum class Kind { BadParameters, WrongCount, DuplicateIndex, ZeroIndex };
  ShareError(Kind kind, const char* what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Degree-f polynomial with constant term `secret`, evaluated at 1..n.
// Requires 1 <= n and f < n. The leading coefficient is nonzero.
std::vector<Share> share_secret(Fp secret, std::size_t f, std::size_t n, Prg& rng);

// Lagrange interpolation at zero from exactly f+1 shares.
Fp reconstruct(std::span<const Share> shares, std::size_t f);

}  // namespace tbft::crypto

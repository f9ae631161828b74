#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "tbft/common/bytes.hpp"

namespace tbft::crypto {

class Prg;

using SymmetricKey = std::array<std::uint8_t, 16>;

struct Ciphertext {
  std::array<std::uint8_t, 12> nonce{};
  Bytes body;
  std::array<std::uint8_t, 16> tag{};
  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

// AES-128-GCM. The nonce is drawn from rng.
Ciphertext aead_encrypt(const SymmetricKey& key, ByteView plaintext, Prg& rng);
// nullopt when authentication fails.
std::optional<Bytes> aead_decrypt(const SymmetricKey& key, const Ciphertext& ct);

}  // namespace tbft::crypto

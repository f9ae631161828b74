#pragma once

#include <memory>
#include <string_view>

#include "tbft/common/bytes.hpp"

namespace tbft::crypto {

class Prg;

struct PublicKey {
  Bytes bytes;
  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct SigningKey {
  Bytes bytes;
};

struct Signature {
  Bytes bytes;
  friend bool operator==(const Signature&, const Signature&) = default;
};

struct KeyPair {
  SigningKey secret;
  PublicKey pub;
};

enum class CryptoMode { Sim, Real };

class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual std::string_view name() const = 0;
  virtual KeyPair generate(Prg& rng) const = 0;
  virtual Signature sign(const SigningKey& key, ByteView msg) const = 0;
  virtual bool verify(const PublicKey& key, ByteView msg, const Signature& sig) const = 0;
};

// Keyed-hash stand-in: sig = HMAC(world_key, pk || msg). Only code holding the
// scheme object can sign, which plays the role of the hardware vendor's root of trust.
std::unique_ptr<SignatureScheme> make_sim_scheme(ByteView world_key);
// Ed25519 through OpenSSL. Keys derive from rng bytes, so runs are reproducible.
std::unique_ptr<SignatureScheme> make_ed25519_scheme();
std::unique_ptr<SignatureScheme> make_scheme(CryptoMode mode, Prg& rng);

}  // namespace tbft::crypto

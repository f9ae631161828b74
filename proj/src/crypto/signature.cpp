#include "tbft/crypto/signature.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include "tbft/crypto/hash.hpp"
#include "tbft/crypto/prg.hpp"

namespace tbft::crypto {

namespace {

class SimScheme final : public SignatureScheme {
 public:
  explicit SimScheme(ByteView world_key) : world_key_(world_key.begin(), world_key.end()) {}

  std::string_view name() const override { return "sim-hmac"; }

  KeyPair generate(Prg& rng) const override {
    KeyPair kp;
    kp.secret.bytes = rng.bytes(32);
    kp.pub = derive_public(kp.secret);
    return kp;
  }

  Signature sign(const SigningKey& key, ByteView msg) const override {
    return tag(derive_public(key), msg);
  }

  bool verify(const PublicKey& key, ByteView msg, const Signature& sig) const override {
    return constant_time_equal(tag(key, msg).bytes, sig.bytes);
  }

 private:
  static PublicKey derive_public(const SigningKey& key) {
    Sha256 h;
    h.update("tbft.sim.pk").update(key.bytes);
    auto d = h.finish();
    return {Bytes(d.bytes.begin(), d.bytes.end())};
  }

  Signature tag(const PublicKey& pk, ByteView msg) const {
    Bytes buf;
    buf.reserve(pk.bytes.size() + msg.size() + 4);
    auto n = static_cast<std::uint32_t>(pk.bytes.size());
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    buf.insert(buf.end(), pk.bytes.begin(), pk.bytes.end());
    buf.insert(buf.end(), msg.begin(), msg.end());
    auto d = hmac_sha256(world_key_, buf);
    return {Bytes(d.bytes.begin(), d.bytes.end())};
  }

  Bytes world_key_;
};

struct PkeyDeleter {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

class Ed25519Scheme final : public SignatureScheme {
 public:
  std::string_view name() const override { return "ed25519"; }

  KeyPair generate(Prg& rng) const override {
    KeyPair kp;
    kp.secret.bytes = rng.bytes(32);
    auto key = private_key(kp.secret);
    std::size_t len = 32;
    kp.pub.bytes.resize(len);
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.pub.bytes.data(), &len) != 1 || len != 32) {
      throw std::runtime_error("ed25519: cannot export public key");
    }
    return kp;
  }

  Signature sign(const SigningKey& sk, ByteView msg) const override {
    auto key = private_key(sk);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    Signature sig;
    std::size_t len = 64;
    sig.bytes.resize(len);
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.bytes.data(), &len, msg.data(), msg.size()) != 1) {
      throw std::runtime_error("ed25519: sign failed");
    }
    sig.bytes.resize(len);
    return sig;
  }

  bool verify(const PublicKey& pk, ByteView msg, const Signature& sig) const override {
    if (pk.bytes.size() != 32 || sig.bytes.size() != 64) return false;
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pk.bytes.data(), 32));
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!key || !ctx) return false;
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), sig.bytes.data(), sig.bytes.size(), msg.data(),
                            msg.size()) == 1;
  }

 private:
  static PkeyPtr private_key(const SigningKey& sk) {
    if (sk.bytes.size() != 32) throw std::invalid_argument("ed25519: bad key size");
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, sk.bytes.data(), 32));
    if (!key) throw std::runtime_error("ed25519: key import failed");
    return key;
  }
};

}  // namespace

std::unique_ptr<SignatureScheme> make_sim_scheme(ByteView world_key) {
  return std::make_unique<SimScheme>(world_key);
}

std::unique_ptr<SignatureScheme> make_ed25519_scheme() { return std::make_unique<Ed25519Scheme>(); }

std::unique_ptr<SignatureScheme> make_scheme(CryptoMode mode, Prg& rng) {
  if (mode == CryptoMode::Real) return make_ed25519_scheme();
  return make_sim_scheme(rng.bytes(32));
}

}  // namespace tbft::crypto

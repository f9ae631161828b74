#include "tbft/crypto/aead.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include "tbft/crypto/prg.hpp"

namespace tbft::crypto {

namespace {
struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

CtxPtr new_ctx() {
  CtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  return ctx;
}
}  // namespace

Ciphertext aead_encrypt(const SymmetricKey& key, ByteView plaintext, Prg& rng) {
  Ciphertext ct;
  rng.fill(ct.nonce);
  ct.body.resize(plaintext.size());
  auto ctx = new_ctx();
  int len = 0;
  bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), ct.nonce.data()) == 1;
  if (ok && !plaintext.empty()) {
    ok = EVP_EncryptUpdate(ctx.get(), ct.body.data(), &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
  }
  ok = ok && EVP_EncryptFinal_ex(ctx.get(), ct.body.data() + len, &len) == 1;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, ct.tag.data()) == 1;
  if (!ok) throw std::runtime_error("aes-128-gcm encrypt failed");
  return ct;
}

std::optional<Bytes> aead_decrypt(const SymmetricKey& key, const Ciphertext& ct) {
  Bytes out(ct.body.size());
  auto ctx = new_ctx();
  int len = 0;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), ct.nonce.data()) != 1) {
    return std::nullopt;
  }
  if (!ct.body.empty() &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.body.data(),
                        static_cast<int>(ct.body.size())) != 1) {
    return std::nullopt;
  }
  auto tag = ct.tag;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1) return std::nullopt;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) return std::nullopt;
  return out;
}

}  // namespace tbft::crypto

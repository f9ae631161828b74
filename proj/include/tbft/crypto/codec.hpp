#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "tbft/common/bytes.hpp"
#include "tbft/crypto/aead.hpp"
#include "tbft/crypto/field.hpp"
#include "tbft/crypto/hash.hpp"
#include "tbft/crypto/shamir.hpp"
#include "tbft/crypto/signature.hpp"

namespace tbft {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical little-endian encoding, variable fields length-prefixed with u32.
class Writer {
 public:
  Writer& u8(std::uint8_t v);
  Writer& u32(std::uint32_t v);
  Writer& u64(std::uint64_t v);
  Writer& boolean(bool v) { return u8(v ? 1 : 0); }
  Writer& raw(ByteView data);
  Writer& bytes(ByteView data);
  Writer& str(std::string_view s) { return bytes(as_bytes(s)); }
  Writer& digest(const crypto::Digest& d) { return raw(d.view()); }
  Writer& field(const crypto::Fp& v);
  Writer& share(const crypto::Share& s);
  Writer& ciphertext(const crypto::Ciphertext& ct);
  Writer& signature(const crypto::Signature& s) { return bytes(s.bytes); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  bool boolean();
  Bytes raw(std::size_t n);
  Bytes bytes();
  std::string str();
  crypto::Digest digest();
  crypto::Fp field();
  crypto::Share share();
  crypto::Ciphertext ciphertext();
  crypto::Signature signature() { return {bytes()}; }

  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  void need(std::size_t n) const;
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace tbft

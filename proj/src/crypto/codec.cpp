#include "tbft/crypto/codec.hpp"

#include <cstring>

namespace tbft {

Writer& Writer::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

Writer& Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

Writer& Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

Writer& Writer::raw(ByteView data) {
  out_.insert(out_.end(), data.begin(), data.end());
  return *this;
}

Writer& Writer::bytes(ByteView data) {
  u32(static_cast<std::uint32_t>(data.size()));
  return raw(data);
}

Writer& Writer::field(const crypto::Fp& v) {
  auto b = v.to_bytes();
  return raw(b);
}

Writer& Writer::share(const crypto::Share& s) { return u32(s.index).field(s.value); }

Writer& Writer::ciphertext(const crypto::Ciphertext& ct) {
  return raw(ct.nonce).bytes(ct.body).raw(ct.tag);
}

void Reader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw DecodeError("truncated input");
}

std::uint8_t Reader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

bool Reader::boolean() {
  auto v = u8();
  if (v > 1) throw DecodeError("bad boolean");
  return v == 1;
}

Bytes Reader::raw(std::size_t n) {
  need(n);
  Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

Bytes Reader::bytes() { return raw(u32()); }

std::string Reader::str() {
  auto b = bytes();
  return std::string(b.begin(), b.end());
}

crypto::Digest Reader::digest() {
  need(32);
  crypto::Digest d;
  std::memcpy(d.bytes.data(), data_.data() + pos_, 32);
  pos_ += 32;
  return d;
}

crypto::Fp Reader::field() {
  need(16);
  std::array<std::uint8_t, 16> b{};
  std::memcpy(b.data(), data_.data() + pos_, 16);
  pos_ += 16;
  auto v = crypto::Fp::from_bytes(b);
  if (v.to_bytes() != b) throw DecodeError("non-canonical field element");
  return v;
}

crypto::Share Reader::share() {
  crypto::Share s;
  s.index = u32();
  s.value = field();
  return s;
}

crypto::Ciphertext Reader::ciphertext() {
  crypto::Ciphertext ct;
  need(12);
  std::memcpy(ct.nonce.data(), data_.data() + pos_, 12);
  pos_ += 12;
  ct.body = bytes();
  need(16);
  std::memcpy(ct.tag.data(), data_.data() + pos_, 16);
  pos_ += 16;
  return ct;
}

void Reader::expect_done() const {
  if (!done()) throw DecodeError("trailing bytes");
}

}  // namespace tbft

#include "tbft/crypto/prg.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "tbft/crypto/codec.hpp"

namespace tbft::crypto {

Prg::Prg(ByteView seed) {
  if (seed.empty()) throw std::invalid_argument("Prg: empty seed");
  key_ = sha256(seed);
}

Prg Prg::from_seed(std::uint64_t seed, std::string_view domain) {
  Writer w;
  w.u64(seed).str(domain);
  return Prg(w.data());
}

void Prg::refill() {
  Sha256 h;
  h.update(key_.view()).update_u64(block_++);
  buf_ = h.finish().bytes;
  pos_ = 0;
}

void Prg::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buf_.size()) refill();
    std::size_t take = std::min(out.size() - done, buf_.size() - pos_);
    std::memcpy(out.data() + done, buf_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

Bytes Prg::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t Prg::next64() {
  std::uint8_t b[8];
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

u128 Prg::next128() {
  u128 hi = next64();
  return (hi << 64) | next64();
}

std::uint64_t Prg::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Prg::uniform: zero bound");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    std::uint64_t v = next64();
    if (v < limit) return v % bound;
  }
}

double Prg::unit() {
  return static_cast<double>(next64() >> 11) * 0x1.0p-53;
}

Prg Prg::fork(std::string_view label) {
  Writer w;
  w.raw(key_.view()).u64(next64()).str(label);
  return Prg(w.data());
}

}  // namespace tbft::crypto

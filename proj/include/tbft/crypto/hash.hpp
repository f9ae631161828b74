#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>

#include "tbft/common/bytes.hpp"

namespace tbft::crypto {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;
  ByteView view() const { return {bytes.data(), bytes.size()}; }
  std::string hex() const { return to_hex(view()); }
  std::string short_hex() const { return hex().substr(0, 16); }
  static Digest from_hex(std::string_view hex);
};

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(ByteView data);
  Sha256& update(std::string_view s) { return update(as_bytes(s)); }
  Sha256& update_u64(std::uint64_t v);
  Digest finish();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

bool constant_time_equal(ByteView a, ByteView b);

}  // namespace tbft::crypto

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "tbft/crypto/aead.hpp"
#include "tbft/crypto/codec.hpp"
#include "tbft/crypto/field.hpp"
#include "tbft/crypto/hash.hpp"
#include "tbft/crypto/prg.hpp"
#include "tbft/crypto/shamir.hpp"
#include "tbft/crypto/signature.hpp"

using namespace tbft;
using namespace tbft::crypto;
using boost::multiprecision::cpp_int;

namespace {

cpp_int to_big(u128 v) {
  cpp_int r = static_cast<std::uint64_t>(v >> 64);
  r <<= 64;
  r += static_cast<std::uint64_t>(v);
  return r;
}

const cpp_int kP = (cpp_int(1) << 127) - 1;

// Independent Lagrange interpolation over big integers.
cpp_int big_interpolate(const std::vector<Share>& shares) {
  cpp_int acc = 0;
  for (const auto& si : shares) {
    cpp_int num = 1, den = 1;
    for (const auto& sj : shares) {
      if (sj.index == si.index) continue;
      num = num * sj.index % kP;
      den = den * ((cpp_int(sj.index) - si.index + kP) % kP) % kP;
    }
    cpp_int inv = boost::multiprecision::powm(den, kP - 2, kP);
    acc = (acc + to_big(si.value.value()) * num % kP * inv) % kP;
  }
  return acc;
}

void for_each_subset(std::size_t n, std::size_t k, const std::function<void(std::vector<std::size_t>)>& fn) {
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<long>(k), true);
  do {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) idx.push_back(i);
    fn(idx);
  } while (std::prev_permutation(mask.begin(), mask.end()));
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256({}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256(as_bytes("abc")).hex() ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.update("a").update("bc");
  CHECK(h.finish() == sha256(as_bytes("abc")));
}

TEST_CASE("hmac-sha256 RFC 4231 case 2") {
  auto d = hmac_sha256(as_bytes("Jefe"), as_bytes("what do ya want for nothing?"));
  CHECK(d.hex() == "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("field arithmetic matches big-integer oracle") {
  Prg rng = Prg::from_seed(7, "field");
  std::vector<u128> edge = {0, 1, 2, Fp::kModulus - 1, Fp::kModulus - 2, u128{1} << 126,
                            (u128{1} << 64) - 1, u128{1} << 64};
  for (int i = 0; i < 2000; ++i) edge.push_back(Fp::random(rng).value());
  for (std::size_t i = 0; i + 1 < edge.size(); ++i) {
    Fp a(edge[i]), b(edge[i + 1]);
    cpp_int A = to_big(a.value()), B = to_big(b.value());
    REQUIRE(to_big((a * b).value()) == A * B % kP);
    REQUIRE(to_big((a + b).value()) == (A + B) % kP);
    REQUIRE(to_big((a - b).value()) == (A - B + kP) % kP);
    if (!a.is_zero()) REQUIRE((a * a.inverse()) == Fp(1));
  }
  CHECK(Fp(Fp::kModulus) == Fp(0));
  CHECK_THROWS_AS(Fp(0).inverse(), std::domain_error);
  Fp x(12345);
  CHECK(Fp::from_bytes(x.to_bytes()) == x);
}

TEST_CASE("shamir exhaustive correctness for f < n <= 7") {
  Prg rng = Prg::from_seed(11, "shamir");
  for (std::size_t n = 1; n <= 7; ++n) {
    for (std::size_t f = 0; f < n; ++f) {
      Fp secret = Fp::random_nonzero(rng);
      auto shares = share_secret(secret, f, n, rng);
      REQUIRE(shares.size() == n);
      for_each_subset(n, f + 1, [&](std::vector<std::size_t> idx) {
        std::vector<Share> pick;
        for (auto i : idx) pick.push_back(shares[i]);
        REQUIRE(reconstruct(pick, f) == secret);
        REQUIRE(big_interpolate(pick) == to_big(secret.value()));
      });
    }
  }
}

TEST_CASE("shamir worked examples") {
  Prg rng = Prg::from_seed(3, "ex");
  auto shares = share_secret(Fp(42), 1, 3, rng);
  CHECK(reconstruct(std::vector<Share>{shares[0], shares[2]}, 1) == Fp(42));
  CHECK(reconstruct(std::vector<Share>{shares[1], shares[2]}, 1) == Fp(42));

  auto zero = share_secret(Fp(0), 1, 3, rng);
  CHECK(reconstruct(std::vector<Share>{zero[0], zero[1]}, 1) == Fp(0));
  // The polynomial is never the zero polynomial.
  CHECK_FALSE(zero[0].value == Fp(0));

  try {
    reconstruct(std::vector<Share>{shares[0], shares[0]}, 1);
    FAIL("expected DuplicateIndex");
  } catch (const ShareError& e) {
    CHECK(e.kind() == ShareError::Kind::DuplicateIndex);
  }
  try {
    reconstruct(std::vector<Share>{shares[0]}, 1);
    FAIL("expected WrongCount");
  } catch (const ShareError& e) {
    CHECK(e.kind() == ShareError::Kind::WrongCount);
  }
  CHECK_THROWS_AS(share_secret(Fp(1), 3, 3, rng), ShareError);
  CHECK_THROWS_AS(share_secret(Fp(1), 0, 0, rng), ShareError);
}

TEST_CASE("shamir hiding against one forged share") {
  // f legitimate shares plus one forged share should essentially never yield s.
  Prg rng = Prg::from_seed(5, "hiding");
  int hits = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Fp secret = Fp::random_nonzero(rng);
    auto shares = share_secret(secret, 2, 5, rng);
    std::vector<Share> pick = {shares[0], shares[3], {5, Fp::random(rng)}};
    if (reconstruct(pick, 2) == secret) ++hits;
  }
  // Bound is 2/p per trial; the expected count over 1e4 trials is far below 1.
  CHECK(hits == 0);
}

TEST_CASE("aead round trip and bit-flip detection") {
  Prg rng = Prg::from_seed(9, "aead");
  SymmetricKey key{};
  rng.fill(key);
  Bytes msg = rng.bytes(48);
  auto ct = aead_encrypt(key, msg, rng);
  auto pt = aead_decrypt(key, ct);
  REQUIRE(pt.has_value());
  CHECK(*pt == msg);

  for (std::size_t byte = 0; byte < ct.body.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      auto bad = ct;
      bad.body[byte] ^= static_cast<std::uint8_t>(1u << bit);
      REQUIRE_FALSE(aead_decrypt(key, bad).has_value());
    }
  }
  for (std::size_t byte = 0; byte < 16; ++byte) {
    auto bad = ct;
    bad.tag[byte] ^= 1;
    REQUIRE_FALSE(aead_decrypt(key, bad).has_value());
  }
  auto bad_nonce = ct;
  bad_nonce.nonce[0] ^= 1;
  CHECK_FALSE(aead_decrypt(key, bad_nonce).has_value());
  SymmetricKey other = key;
  other[0] ^= 1;
  CHECK_FALSE(aead_decrypt(other, ct).has_value());

  auto empty = aead_encrypt(key, {}, rng);
  CHECK(aead_decrypt(key, empty).has_value());
}

TEST_CASE("prg determinism and seed sensitivity") {
  Bytes seed = {1, 2, 3, 4};
  Prg a(seed), b(seed);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next64() == b.next64());

  Bytes seed2 = seed;
  seed2.push_back(0x01);
  Prg c(seed), d(seed2);
  auto x = c.bytes(128), y = d.bytes(128);  // first 1024 bits
  CHECK(x != y);
  CHECK_THROWS_AS(Prg(Bytes{}), std::invalid_argument);
}

TEST_CASE("prg chi-square uniformity of next64 mod 8") {
  Prg rng = Prg::from_seed(1, "chi");
  const int draws = 100000;
  std::array<int, 8> counts{};
  for (int i = 0; i < draws; ++i) ++counts[rng.next64() % 8];
  double expected = draws / 8.0, stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(7);
  double critical = boost::math::quantile(boost::math::complement(dist, 0.01));
  CHECK(stat < critical);
}

TEST_CASE("prg uniform bounds") {
  Prg rng = Prg::from_seed(2, "u");
  for (int i = 0; i < 1000; ++i) REQUIRE(rng.uniform(3) < 3);
  CHECK_THROWS(rng.uniform(0));
  for (int i = 0; i < 1000; ++i) {
    double u = rng.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

namespace {
void signature_properties(const SignatureScheme& scheme) {
  Prg rng = Prg::from_seed(4, scheme.name());
  auto kp = scheme.generate(rng);
  auto other = scheme.generate(rng);
  Bytes msg = rng.bytes(32);
  auto sig = scheme.sign(kp.secret, msg);
  CHECK(scheme.verify(kp.pub, msg, sig));
  CHECK(scheme.sign(kp.secret, msg) == sig);
  CHECK_FALSE(scheme.verify(other.pub, msg, sig));
  for (std::size_t byte = 0; byte < msg.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes bad = msg;
      bad[byte] ^= static_cast<std::uint8_t>(1u << bit);
      REQUIRE_FALSE(scheme.verify(kp.pub, bad, sig));
    }
  }
  auto bad_sig = sig;
  bad_sig.bytes[0] ^= 1;
  CHECK_FALSE(scheme.verify(kp.pub, msg, bad_sig));
  CHECK_FALSE(scheme.verify(kp.pub, msg, Signature{}));
}
}  // namespace

TEST_CASE("sim signature scheme") {
  Prg rng = Prg::from_seed(1, "world");
  auto scheme = make_scheme(CryptoMode::Sim, rng);
  signature_properties(*scheme);
}

TEST_CASE("ed25519 signature scheme") {
  auto scheme = make_ed25519_scheme();
  signature_properties(*scheme);
  // Same rng bytes give the same key pair.
  Prg a = Prg::from_seed(8, "k"), b = Prg::from_seed(8, "k");
  CHECK(scheme->generate(a).pub == scheme->generate(b).pub);
}

TEST_CASE("codec round trip and truncation") {
  Writer w;
  w.u8(7).u32(0xdeadbeef).u64(1ull << 40).str("hi").field(Fp(99)).share({3, Fp(5)});
  auto buf = w.data();
  Reader r(buf);
  CHECK(r.u8() == 7);
  CHECK(r.u32() == 0xdeadbeef);
  CHECK(r.u64() == (1ull << 40));
  CHECK(r.str() == "hi");
  CHECK(r.field() == Fp(99));
  CHECK(r.share() == Share{3, Fp(5)});
  CHECK(r.done());
  Bytes cut(buf.begin(), buf.end() - 1);
  Reader r2(cut);
  r2.u8();
  r2.u32();
  r2.u64();
  r2.str();
  r2.field();
  CHECK_THROWS_AS(r2.share(), DecodeError);
}

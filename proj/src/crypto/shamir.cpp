#include "tbft/crypto/shamir.hpp"

#include <set>

#include "tbft/crypto/prg.hpp"

namespace tbft::crypto {

std::vector<Share> share_secret(Fp secret, std::size_t f, std::size_t n, Prg& rng) {
  if (n == 0) throw ShareError(ShareError::Kind::BadParameters, "share_secret: n must be positive");
  if (f >= n) throw ShareError(ShareError::Kind::BadParameters, "share_secret: need f < n");
  std::vector<Fp> coeffs(f + 1);
  coeffs[0] = secret;
  for (std::size_t k = 1; k <= f; ++k) {
    coeffs[k] = k == f ? Fp::random_nonzero(rng) : Fp::random(rng);
  }
  std::vector<Share> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const Fp x = Fp::from_u64(i);
    Fp y;
    for (std::size_t k = coeffs.size(); k-- > 0;) y = y * x + coeffs[k];
    out.push_back({static_cast<std::uint32_t>(i), y});
  }
  return out;
}

Fp reconstruct(std::span<const Share> shares, std::size_t f) {
  if (shares.size() != f + 1) {
    throw ShareError(ShareError::Kind::WrongCount, "reconstruct: need exactly f+1 shares");
  }
  std::set<std::uint32_t> seen;
  for (const auto& s : shares) {
    if (s.index == 0) throw ShareError(ShareError::Kind::ZeroIndex, "reconstruct: index 0");
    if (!seen.insert(s.index).second) {
      throw ShareError(ShareError::Kind::DuplicateIndex, "reconstruct: duplicate index");
    }
  }
  Fp acc;
  for (const auto& si : shares) {
    Fp num(1), den(1);
    const Fp xi = Fp::from_u64(si.index);
    for (const auto& sj : shares) {
      if (sj.index == si.index) continue;
      const Fp xj = Fp::from_u64(sj.index);
      num *= xj;
      den *= xj - xi;
    }
    acc += si.value * num * den.inverse();
  }
  return acc;
}

}  // namespace tbft::crypto

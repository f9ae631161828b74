#include <stdexcept>

#include "tbft/enclave/enclave.hpp"

namespace tbft {

Deployment trusted_setup(std::size_t n, std::size_t f, crypto::CryptoMode mode, crypto::Prg& rng) {
  if (n == 0 || n != 2 * f + 1) throw std::invalid_argument("trusted_setup: need n = 2f + 1");
  std::shared_ptr<const crypto::SignatureScheme> scheme = crypto::make_scheme(mode, rng);

  std::vector<std::vector<crypto::SymmetricKey>> links(n, std::vector<crypto::SymmetricKey>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      rng.fill(links[i][j]);
      links[j][i] = links[i][j];
    }
  }
  std::array<std::uint8_t, 32> election_seed{};
  rng.fill(election_seed);

  Deployment d;
  std::vector<crypto::PublicKey> keys;
  for (std::size_t i = 0; i < n; ++i) {
    auto kp = scheme->generate(rng);
    keys.push_back(kp.pub);
    EnclaveSecrets s;
    s.id = static_cast<ReplicaId>(i);
    s.n = n;
    s.f = f;
    s.signing_key = std::move(kp.secret);
    s.link_keys = links[i];
    s.election_seed = election_seed;
    s.rng_seed = rng.bytes(32);
    d.secrets.push_back(std::move(s));
  }
  d.pki = std::make_shared<const Pki>(scheme, std::move(keys));
  return d;
}

}  // namespace tbft

#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tbft/crypto/aead.hpp"
#include "tbft/crypto/codec.hpp"
#include "tbft/crypto/hash.hpp"
#include "tbft/crypto/shamir.hpp"
#include "tbft/crypto/signature.hpp"

namespace tbft {

using ReplicaId = std::uint32_t;
using ViewNumber = std::uint64_t;

// Ordered by view first, then counter.
struct CounterValue {
  ViewNumber view = 0;
  std::uint64_t counter = 0;

  auto operator<=>(const CounterValue&) const = default;
  CounterValue next() const { return {view, counter + 1}; }
  std::string str() const;
};

enum class Purpose : std::uint8_t {
  Proposal = 1,
  SecretCommitment = 2,
  HistoryAnchor = 3,
};

std::string_view to_string(Purpose p);

// An enclave-signed binding of a payload digest to a counter value.
struct SignedCounter {
  Purpose purpose = Purpose::Proposal;
  ReplicaId signer = 0;
  crypto::Digest payload;
  CounterValue counter;
  crypto::Signature sig;

  Bytes signed_bytes() const;
  friend bool operator==(const SignedCounter&, const SignedCounter&) = default;
};

// Output of generate_secret: signed commitment H(s) plus one encrypted share per replica.
struct SecretEnvelope {
  SignedCounter commitment;
  std::vector<crypto::Ciphertext> shares;
};

struct ReleasedShare {
  crypto::Share share;
  crypto::Digest commitment;
  CounterValue counter;
};

struct MessageLogProof {
  ReplicaId issuer = 0;
  std::optional<SignedCounter> highest;
  CounterValue proof_counter;
  crypto::Signature sig;

  Bytes signed_bytes() const;
  friend bool operator==(const MessageLogProof&, const MessageLogProof&) = default;
};

// Merged view-change state: the highest proposal among a quorum of proofs, sealed by
// the next leader at highest.counter + 1 (or 0 for an empty history).
struct HistoryAnchor {
  std::optional<SignedCounter> highest;
  ViewNumber target_view = 0;
  SignedCounter seal;

  static crypto::Digest digest_for(const std::optional<SignedCounter>& highest, ViewNumber target);
  friend bool operator==(const HistoryAnchor&, const HistoryAnchor&) = default;
};

// Counter the anchor seal must carry for a given highest proposal.
std::uint64_t anchor_counter_for(const std::optional<SignedCounter>& highest);

const crypto::Digest& empty_digest();
const crypto::Digest& genesis_digest();
crypto::Digest secret_digest(const crypto::Fp& secret);

class Pki {
 public:
  Pki(std::shared_ptr<const crypto::SignatureScheme> scheme, std::vector<crypto::PublicKey> keys);

  std::size_t size() const { return keys_.size(); }
  const crypto::PublicKey& key(ReplicaId id) const { return keys_.at(id); }
  const crypto::SignatureScheme& scheme() const { return *scheme_; }

  bool verify(ReplicaId signer, ByteView msg, const crypto::Signature& sig) const;
  bool verify(const SignedCounter& sc) const;
  bool verify(const MessageLogProof& proof) const;

 private:
  std::shared_ptr<const crypto::SignatureScheme> scheme_;
  std::vector<crypto::PublicKey> keys_;
};

// Structural and cryptographic checks on a log proof in view `view` whose proposals
// must come from `view_leader`: the proof counter sits right after the highest entry.
bool proof_well_formed(const MessageLogProof& proof, const Pki& pki, ReplicaId view_leader,
                       ViewNumber view);

void put(Writer& w, const CounterValue& cv);
void put(Writer& w, const SignedCounter& sc);
void put(Writer& w, const MessageLogProof& p);
void put(Writer& w, const HistoryAnchor& a);
CounterValue get_counter_value(Reader& r);
SignedCounter get_signed_counter(Reader& r);
MessageLogProof get_log_proof(Reader& r);
HistoryAnchor get_anchor(Reader& r);

template <typename T>
void put_optional(Writer& w, const std::optional<T>& v) {
  w.boolean(v.has_value());
  if (v) put(w, *v);
}

}  // namespace tbft

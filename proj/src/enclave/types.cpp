#include "tbft/enclave/types.hpp"

#include <stdexcept>

namespace tbft {

std::string CounterValue::str() const {
  return "(" + std::to_string(counter) + "," + std::to_string(view) + ")";
}

std::string_view to_string(Purpose p) {
  switch (p) {
    case Purpose::Proposal: return "proposal";
    case Purpose::SecretCommitment: return "commitment";
    case Purpose::HistoryAnchor: return "anchor";
  }
  return "unknown";
}

Bytes SignedCounter::signed_bytes() const {
  Writer w;
  w.str("tbft/counter").u8(static_cast<std::uint8_t>(purpose)).u32(signer).digest(payload);
  put(w, counter);
  return std::move(w).take();
}

Bytes MessageLogProof::signed_bytes() const {
  Writer w;
  w.str("tbft/log-proof").u32(issuer);
  w.boolean(highest.has_value());
  if (highest) {
    w.digest(highest->payload);
    put(w, highest->counter);
    w.u32(highest->signer);
  } else {
    w.digest(empty_digest());
  }
  put(w, proof_counter);
  return std::move(w).take();
}

crypto::Digest HistoryAnchor::digest_for(const std::optional<SignedCounter>& highest,
                                         ViewNumber target) {
  Writer w;
  w.str("tbft/anchor").u64(target);
  if (highest) {
    put(w, *highest);
  } else {
    w.digest(empty_digest());
  }
  return crypto::sha256(w.data());
}

std::uint64_t anchor_counter_for(const std::optional<SignedCounter>& highest) {
  return highest ? highest->counter.counter + 1 : 0;
}

const crypto::Digest& empty_digest() {
  static const crypto::Digest d = crypto::sha256(as_bytes("tbft/empty-log"));
  return d;
}

const crypto::Digest& genesis_digest() {
  static const crypto::Digest d = crypto::sha256(as_bytes("tbft/genesis"));
  return d;
}

crypto::Digest secret_digest(const crypto::Fp& secret) {
  auto b = secret.to_bytes();
  return crypto::sha256(b);
}

Pki::Pki(std::shared_ptr<const crypto::SignatureScheme> scheme, std::vector<crypto::PublicKey> keys)
    : scheme_(std::move(scheme)), keys_(std::move(keys)) {
  if (!scheme_) throw std::invalid_argument("Pki: null scheme");
}

bool Pki::verify(ReplicaId signer, ByteView msg, const crypto::Signature& sig) const {
  if (signer >= keys_.size()) return false;
  return scheme_->verify(keys_[signer], msg, sig);
}

bool Pki::verify(const SignedCounter& sc) const {
  return verify(sc.signer, sc.signed_bytes(), sc.sig);
}

bool Pki::verify(const MessageLogProof& proof) const {
  return verify(proof.issuer, proof.signed_bytes(), proof.sig);
}

bool proof_well_formed(const MessageLogProof& proof, const Pki& pki, ReplicaId view_leader,
                       ViewNumber view) {
  if (proof.proof_counter.view != view) return false;
  if (proof.highest) {
    const auto& h = *proof.highest;
    if (h.purpose != Purpose::Proposal || h.signer != view_leader) return false;
    if (h.counter.view != view) return false;
    if (proof.proof_counter.counter != h.counter.counter + 1) return false;
    if (!pki.verify(h)) return false;
  } else if (proof.proof_counter.counter != 0) {
    return false;
  }
  return pki.verify(proof);
}

void put(Writer& w, const CounterValue& cv) { w.u64(cv.view).u64(cv.counter); }

void put(Writer& w, const SignedCounter& sc) {
  w.u8(static_cast<std::uint8_t>(sc.purpose)).u32(sc.signer).digest(sc.payload);
  put(w, sc.counter);
  w.signature(sc.sig);
}

void put(Writer& w, const MessageLogProof& p) {
  w.u32(p.issuer);
  put_optional(w, p.highest);
  put(w, p.proof_counter);
  w.signature(p.sig);
}

void put(Writer& w, const HistoryAnchor& a) {
  put_optional(w, a.highest);
  w.u64(a.target_view);
  put(w, a.seal);
}

CounterValue get_counter_value(Reader& r) {
  CounterValue cv;
  cv.view = r.u64();
  cv.counter = r.u64();
  return cv;
}

SignedCounter get_signed_counter(Reader& r) {
  SignedCounter sc;
  auto p = r.u8();
  if (p < 1 || p > 3) throw DecodeError("bad purpose");
  sc.purpose = static_cast<Purpose>(p);
  sc.signer = r.u32();
  sc.payload = r.digest();
  sc.counter = get_counter_value(r);
  sc.sig = r.signature();
  return sc;
}

MessageLogProof get_log_proof(Reader& r) {
  MessageLogProof p;
  p.issuer = r.u32();
  if (r.boolean()) p.highest = get_signed_counter(r);
  p.proof_counter = get_counter_value(r);
  p.sig = r.signature();
  return p;
}

HistoryAnchor get_anchor(Reader& r) {
  HistoryAnchor a;
  if (r.boolean()) a.highest = get_signed_counter(r);
  a.target_view = r.u64();
  a.seal = get_signed_counter(r);
  return a;
}

}  // namespace tbft

#include "tbft/enclave/enclave.hpp"

#include <set>
#include <stdexcept>

namespace tbft {

std::string_view to_string(EnclaveError e) {
  switch (e) {
    case EnclaveError::InvalidMessage: return "InvalidMessage";
    case EnclaveError::InvalidCounter: return "InvalidCounter";
    case EnclaveError::VotingLocked: return "VotingLocked";
    case EnclaveError::StaleBinding: return "StaleBinding";
    case EnclaveError::NotLatestVote: return "NotLatestVote";
    case EnclaveError::InsufficientQuorum: return "InsufficientQuorum";
    case EnclaveError::NotLeader: return "NotLeader";
  }
  return "Unknown";
}

namespace {

Bytes share_plaintext(const crypto::Share& share, CounterValue at, const crypto::Digest& h) {
  Writer w;
  w.share(share);
  put(w, at);
  w.digest(h);
  return std::move(w).take();
}

}  // namespace

Enclave::Enclave(EnclaveSecrets secrets, std::shared_ptr<const Pki> pki)
    : id_(secrets.id),
      n_(secrets.n),
      f_(secrets.f),
      sk_(std::move(secrets.signing_key)),
      link_keys_(std::move(secrets.link_keys)),
      r1_(secrets.election_seed),
      rng_(secrets.rng_seed),
      pki_(std::move(pki)) {
  if (!pki_ || pki_->size() != n_ || link_keys_.size() != n_ || id_ >= n_) {
    throw std::invalid_argument("Enclave: inconsistent setup");
  }
  view_leader_ = signer_ = elect_leader(0, genesis_digest());
}

std::optional<ReplicaId> Enclave::elected(ViewNumber view) const {
  auto it = elected_.find(view);
  if (it == elected_.end()) return std::nullopt;
  return it->second;
}

SignedCounter Enclave::sign(Purpose purpose, const crypto::Digest& payload, CounterValue at) const {
  SignedCounter sc;
  sc.purpose = purpose;
  sc.signer = id_;
  sc.payload = payload;
  sc.counter = at;
  sc.sig = pki_->scheme().sign(sk_, sc.signed_bytes());
  if (observer_) observer_->on_signed(id_, sc);
  return sc;
}

template <typename T>
Expected<T, EnclaveError> Enclave::fail(std::string_view op, EnclaveError e) const {
  if (observer_) observer_->on_error(id_, op, e);
  return unexpected(e);
}

SignedCounter Enclave::create_counter(const crypto::Digest& x) {
  const CounterValue at{v_, c_};
  const bool self_vote = !locked();
  auto sc = sign(Purpose::Proposal, x, at);
  if (self_vote) {
    lv_ = at;
    pending_self_vote_ = at;
  }
  ++c_;
  return sc;
}

Expected<SecretEnvelope, EnclaveError> Enclave::generate_secret(CounterValue at) {
  if (at != current() || secret_issued_for_ == at) {
    return fail<SecretEnvelope>("generate_secret", EnclaveError::StaleBinding);
  }
  const auto secret = crypto::Fp::random_nonzero(rng_);
  const auto h = secret_digest(secret);
  auto shares = crypto::share_secret(secret, f_, n_, rng_);
  SecretEnvelope env;
  for (std::size_t j = 0; j < n_; ++j) {
    env.shares.push_back(crypto::aead_encrypt(link_keys_[j], share_plaintext(shares[j], at, h), rng_));
  }
  env.commitment = sign(Purpose::SecretCommitment, h, at);
  secret_issued_for_ = at;
  return env;
}

Expected<ReleasedShare, EnclaveError> Enclave::verify_counter(const SignedCounter& proposal,
                                                              const crypto::Ciphertext& xi) {
  constexpr std::string_view op = "verify_counter";
  const bool self_vote = proposal.signer == id_ && pending_self_vote_ == proposal.counter;
  if (!self_vote && locked()) return fail<ReleasedShare>(op, EnclaveError::VotingLocked);
  if (proposal.purpose != Purpose::Proposal || proposal.signer != signer_ || !pki_->verify(proposal)) {
    return fail<ReleasedShare>(op, EnclaveError::InvalidMessage);
  }
  auto plain = crypto::aead_decrypt(link_keys_[proposal.signer], xi);
  if (!plain) return fail<ReleasedShare>(op, EnclaveError::InvalidMessage);
  ReleasedShare out;
  try {
    Reader r(*plain);
    out.share = r.share();
    out.counter = get_counter_value(r);
    out.commitment = r.digest();
    r.expect_done();
  } catch (const DecodeError&) {
    return fail<ReleasedShare>(op, EnclaveError::InvalidMessage);
  }
  if (out.counter != proposal.counter) return fail<ReleasedShare>(op, EnclaveError::InvalidCounter);
  if (out.share.index != id_ + 1) return fail<ReleasedShare>(op, EnclaveError::InvalidMessage);

  if (self_vote) {
    pending_self_vote_.reset();
  } else {
    if (proposal.counter.view != v_ || proposal.counter.counter != c_) {
      return fail<ReleasedShare>(op, EnclaveError::InvalidCounter);
    }
    lv_ = proposal.counter;
    ++c_;
  }
  if (transition_target_) nv_voted_ = true;
  if (observer_) observer_->on_share_released(id_, proposal, out);
  return out;
}

Expected<MessageLogProof, EnclaveError> Enclave::get_highest_message(
    const std::optional<SignedCounter>& highest) {
  constexpr std::string_view op = "get_highest_message";
  MessageLogProof proof;
  proof.issuer = id_;
  if (adopted_) {
    // After adopting an anchor the enclave reports the anchor's history; the
    // anchor's seal already occupies the proof counter.
    if (highest != adopted_->highest) return fail<MessageLogProof>(op, EnclaveError::NotLatestVote);
    proof.highest = adopted_->highest;
    proof.proof_counter = adopted_->seal.counter;
  } else {
    if (highest) {
      if (highest->purpose != Purpose::Proposal || !pki_->verify(*highest)) {
        return fail<MessageLogProof>(op, EnclaveError::InvalidMessage);
      }
      if (!lv_ || highest->counter != *lv_ || highest->signer != signer_) {
        return fail<MessageLogProof>(op, EnclaveError::NotLatestVote);
      }
    } else if (lv_) {
      return fail<MessageLogProof>(op, EnclaveError::NotLatestVote);
    }
    proof.highest = highest;
    proof.proof_counter = CounterValue{v_, c_};
    ++c_;
  }
  proof_lock_ = true;
  pending_self_vote_.reset();
  proof.sig = pki_->scheme().sign(sk_, proof.signed_bytes());
  if (observer_) observer_->on_log_proof(id_, proof);
  return proof;
}

Expected<HistoryAnchor, EnclaveError> Enclave::merge_highest_messages(
    std::span<const MessageLogProof> proofs, ViewNumber target_view) {
  constexpr std::string_view op = "merge_highest_messages";
  if (target_view <= v_ || elected(target_view) != id_) {
    return fail<HistoryAnchor>(op, EnclaveError::NotLeader);
  }
  if (nv_voted_) return fail<HistoryAnchor>(op, EnclaveError::VotingLocked);

  std::set<ReplicaId> issuers;
  std::optional<SignedCounter> best;
  for (const auto& p : proofs) {
    if (p.issuer >= n_ || issuers.count(p.issuer) != 0) continue;
    if (!proof_well_formed(p, *pki_, view_leader_, v_)) continue;
    issuers.insert(p.issuer);
    if (p.highest && (!best || p.highest->counter > best->counter)) best = p.highest;
  }
  if (issuers.size() < f_ + 1) return fail<HistoryAnchor>(op, EnclaveError::InsufficientQuorum);

  const std::uint64_t base = anchor_counter_for(best);
  if (c_ > base + 1) return fail<HistoryAnchor>(op, EnclaveError::InvalidCounter);

  HistoryAnchor anchor;
  anchor.highest = best;
  anchor.target_view = target_view;
  anchor.seal = sign(Purpose::HistoryAnchor, HistoryAnchor::digest_for(best, target_view),
                     CounterValue{v_, base});
  adopt(anchor);
  return anchor;
}

bool Enclave::anchor_well_formed(const HistoryAnchor& anchor) const {
  const auto& seal = anchor.seal;
  if (anchor.target_view <= v_ || elected(anchor.target_view) != seal.signer) return false;
  if (seal.purpose != Purpose::HistoryAnchor || seal.counter.view != v_) return false;
  if (seal.counter.counter != anchor_counter_for(anchor.highest)) return false;
  if (seal.payload != HistoryAnchor::digest_for(anchor.highest, anchor.target_view)) return false;
  if (anchor.highest) {
    const auto& h = *anchor.highest;
    if (h.purpose != Purpose::Proposal || h.signer != view_leader_ || h.counter.view != v_) {
      return false;
    }
    if (!pki_->verify(h)) return false;
  }
  return pki_->verify(seal);
}

void Enclave::adopt(const HistoryAnchor& anchor) {
  lv_ = anchor.seal.counter;
  c_ = anchor.seal.counter.counter + 1;
  signer_ = anchor.seal.signer;
  transition_target_ = anchor.target_view;
  adopted_ = anchor;
  proof_lock_ = false;
  pending_self_vote_.reset();
}

Status<EnclaveError> Enclave::sync_with_highest(const HistoryAnchor& anchor) {
  constexpr std::string_view op = "sync_with_highest";
  if (nv_voted_) return fail<Ok>(op, EnclaveError::VotingLocked);
  if (!anchor_well_formed(anchor)) return fail<Ok>(op, EnclaveError::InvalidMessage);
  if (c_ > anchor.seal.counter.counter + 1) return fail<Ok>(op, EnclaveError::InvalidCounter);
  adopt(anchor);
  return Ok{};
}

void Enclave::update_view() {
  ++v_;
  c_ = 0;
  lv_.reset();
  pending_self_vote_.reset();
  secret_issued_for_.reset();
  proof_lock_ = false;
  nv_voted_ = false;
  transition_target_.reset();
  adopted_.reset();
  auto leader = elected(v_);
  view_leader_ = signer_ = leader ? *leader : static_cast<ReplicaId>(n_);
  elected_.erase(elected_.begin(), elected_.lower_bound(v_));
}

ReplicaId Enclave::elect_leader(ViewNumber next_view, const crypto::Digest& last_qc) {
  Writer w;
  w.raw(r1_).digest(last_qc).u64(next_view);
  crypto::Prg prg(w.data());
  auto leader = static_cast<ReplicaId>(prg.next64() % n_);
  elected_[next_view] = leader;
  return leader;
}

}  // namespace tbft

#include "tbft/protocol/message_log.hpp"

namespace tbft {

std::string_view to_string(LogCheck c) {
  switch (c) {
    case LogCheck::Valid: return "Valid";
    case LogCheck::BadSignature: return "BadSignature";
    case LogCheck::WrongLeader: return "WrongLeader";
    case LogCheck::WrongView: return "WrongView";
    case LogCheck::Gap: return "Gap";
    case LogCheck::ProofMismatch: return "ProofMismatch";
    case LogCheck::HoleBeforeProof: return "HoleBeforeProof";
  }
  return "Unknown";
}

LogCheck validate_log(const MessageLog& log, const Pki& pki, ReplicaId view_leader, ViewNumber view) {
  for (std::size_t i = 0; i < log.proposals.size(); ++i) {
    const auto& p = log.proposals[i];
    if (p.purpose != Purpose::Proposal || p.signer != view_leader) return LogCheck::WrongLeader;
    if (p.counter.view != view) return LogCheck::WrongView;
    if (p.counter.counter != i) return LogCheck::Gap;
    if (!pki.verify(p)) return LogCheck::BadSignature;
  }
  const auto& proof = log.proof;
  if (proof.proof_counter.view != view) return LogCheck::WrongView;
  if (!pki.verify(proof)) return LogCheck::BadSignature;
  if (log.proposals.empty()) {
    if (proof.highest) return LogCheck::ProofMismatch;
  } else if (!proof.highest || *proof.highest != log.proposals.back()) {
    return LogCheck::ProofMismatch;
  }
  if (proof.proof_counter.counter != log.proposals.size()) return LogCheck::HoleBeforeProof;
  return LogCheck::Valid;
}

}  // namespace tbft

#pragma once

#include <string_view>
#include <vector>

#include "tbft/enclave/types.hpp"

namespace tbft {

// A replica's claimed message log for one view: the leader's proposals it holds,
// in counter order, plus the enclave proof over the last one.
struct MessageLog {
  std::vector<SignedCounter> proposals;
  MessageLogProof proof;
};

enum class LogCheck {
  Valid,
  BadSignature,
  WrongLeader,
  WrongView,
  Gap,
  ProofMismatch,
  HoleBeforeProof,
};

std::string_view to_string(LogCheck c);

// Validity of a log in `view` whose proposals must come from `view_leader`: every
// proposal signed by the leader, counters contiguous from 0, and the proof sealing
// the last proposal at exactly the next counter.
LogCheck validate_log(const MessageLog& log, const Pki& pki, ReplicaId view_leader, ViewNumber view);

}  // namespace tbft

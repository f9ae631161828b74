#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tbft/enclave/types.hpp"

namespace tbft {

// Replicas are nodes 0..n-1; clients follow.
using NodeId = std::uint32_t;

enum class OpType : std::uint8_t { Put = 1, Get = 2, Noop = 3 };

struct Operation {
  OpType type = OpType::Noop;
  std::string key;
  Bytes value;
  friend bool operator==(const Operation&, const Operation&) = default;
};

enum class ProofKind : std::uint8_t { Commitment = 1, Execution = 2 };
enum class Subscription : std::uint8_t { Commitment = 1, Execution = 2, Both = 3 };

inline bool wants(Subscription s, ProofKind k) {
  return (static_cast<std::uint8_t>(s) & static_cast<std::uint8_t>(k)) != 0;
}

struct ClientRequest {
  NodeId client = 0;
  std::uint64_t request_id = 0;
  Operation op;
  Subscription subscription = Subscription::Commitment;
  friend bool operator==(const ClientRequest&, const ClientRequest&) = default;
};

struct QuorumCert {
  CounterValue counter;
  crypto::Fp secret;
  friend bool operator==(const QuorumCert&, const QuorumCert&) = default;
};

enum class ProposalKind : std::uint8_t { Normal = 0, NewView = 1 };

struct ProposalBody {
  ProposalKind kind = ProposalKind::Normal;
  CounterValue counter;
  std::vector<ClientRequest> batch;
  std::optional<QuorumCert> justify;     // QC for the previous proposal
  std::optional<crypto::Digest> result;  // results of the justified proposal's batch
  std::optional<crypto::Digest> parent;  // digest of the previous proposal (pipelined)
  crypto::Digest secret_commitment;
  std::optional<crypto::Digest> anchor;  // new-view proposals: anchor seal payload

  crypto::Digest digest() const;
  friend bool operator==(const ProposalBody&, const ProposalBody&) = default;
};

// A proposal as delivered to one replica: signed body, signed secret commitment and
// that replica's encrypted share.
struct ProposalMsg {
  ProposalBody body;
  SignedCounter leader_sig;
  SignedCounter commitment;
  std::optional<crypto::Ciphertext> share;
  friend bool operator==(const ProposalMsg&, const ProposalMsg&) = default;
};

enum class MsgKind : std::uint8_t {
  Request = 1,
  Prepare,
  VoteForCommit,
  Commit,
  VoteForDecide,
  Decide,
  RequestViewChange,
  ViewChange,
  VoteForNewView,
  NewView,
  FetchProposals,
  Proposals,
  Reply,
};

inline constexpr int kMsgKindCount = 13;
std::string_view to_string(MsgKind k);
std::optional<MsgKind> msg_kind_from_string(std::string_view s);
bool is_view_change_kind(MsgKind k);

struct RequestMsg {
  ClientRequest request;
};

struct ProposalMessage {
  ProposalMsg proposal;
};

struct VoteMsg {
  CounterValue counter;
  crypto::Share share;
};

struct DecideMsg {
  QuorumCert qc;
};

struct RequestViewChangeMsg {
  ViewNumber target = 0;
  MessageLogProof proof;
};

struct ViewChangeMsg {
  HistoryAnchor anchor;
  ProposalMsg proposal;
};

// Everything needed to verify that view anchor.seal.counter.view ended and
// anchor.target_view began.
struct ViewTransition {
  HistoryAnchor anchor;
  SignedCounter commitment;
  QuorumCert qc;
  friend bool operator==(const ViewTransition&, const ViewTransition&) = default;
};

struct NewViewMsg {
  ViewTransition transition;
};

struct FetchMsg {
  ViewNumber view = 0;
  std::uint64_t from = 0;
  std::uint64_t to = 0;
};

struct StoredEntry {
  ProposalMsg proposal;
  std::optional<QuorumCert> qc;
};

struct ProposalsMsg {
  ViewNumber view = 0;
  std::vector<StoredEntry> entries;
  std::optional<ViewTransition> transition;
};

struct ReplyMsg {
  NodeId client = 0;
  std::uint64_t request_id = 0;
  ProofKind kind = ProofKind::Commitment;
  Bytes result;
  QuorumCert qc;
  SignedCounter commitment;
  ReplicaId leader = 0;
  ViewNumber view = 0;
};

using MessageBody = std::variant<RequestMsg, ProposalMessage, VoteMsg, DecideMsg,
                                 RequestViewChangeMsg, ViewChangeMsg, NewViewMsg, FetchMsg,
                                 ProposalsMsg, ReplyMsg>;

struct Message {
  MsgKind kind = MsgKind::Request;
  MessageBody body;
};

Bytes encode(const Message& m);
// Throws DecodeError on malformed input, including a kind/body mismatch.
Message decode(ByteView data);

// Counter value a message refers to, for tracing.
std::optional<CounterValue> counter_of(const Message& m);

crypto::Digest request_digest(const ClientRequest& r);
crypto::Digest batch_digest(const std::vector<ClientRequest>& batch);

void put(Writer& w, const ClientRequest& r);
void put(Writer& w, const QuorumCert& qc);
void put(Writer& w, const ProposalBody& b);
void put(Writer& w, const ProposalMsg& p);
void put(Writer& w, const ViewTransition& t);
ClientRequest get_request(Reader& r);
QuorumCert get_qc(Reader& r);
ProposalBody get_body(Reader& r);
ProposalMsg get_proposal(Reader& r);
ViewTransition get_transition(Reader& r);

}  // namespace tbft

#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tbft/enclave/enclave.hpp"
#include "tbft/protocol/kv.hpp"
#include "tbft/protocol/messages.hpp"

namespace tbft {

enum class Mode : std::uint8_t { Basic, Pipelined };

struct ReplicaConfig {
  std::size_t n = 3;
  std::size_t f = 1;
  Mode mode = Mode::Basic;
  std::uint64_t delta = 10;
  std::uint64_t view_change_timeout = 160;  // T_v
  std::uint32_t max_backoff_exponent = 3;
  std::size_t batch_max = 64;
  std::uint64_t window = 64;  // out-of-order buffer
};

struct ExecRecord {
  CounterValue counter;
  crypto::Digest batch;
  std::size_t ops = 0;
};

// Services the runtime provides to a replica.
class ReplicaEnv {
 public:
  virtual ~ReplicaEnv() = default;
  virtual std::uint64_t now() const = 0;
  virtual void send(NodeId from, NodeId to, const Message& msg) = 0;
  virtual void set_timer(NodeId node, std::uint64_t delay, std::uint64_t token) = 0;

  virtual void on_execute(ReplicaId, const ExecRecord&, std::size_t /*position*/) {}
  virtual void on_view(ReplicaId, ViewNumber, ReplicaId /*leader*/) {}
  virtual void on_qc(ReplicaId, const QuorumCert&, std::string_view /*phase*/) {}
  virtual void on_view_change_request(ReplicaId, ViewNumber /*target*/, std::string_view /*reason*/) {}
  virtual void on_log_accepted(ReplicaId, const MessageLogProof&) {}
  virtual void on_note(ReplicaId, std::string_view) {}
};

class Replica {
 public:
  Replica(ReplicaConfig cfg, std::unique_ptr<Enclave> enclave, std::shared_ptr<const Pki> pki,
          ReplicaEnv& env);
  virtual ~Replica() = default;
  Replica(const Replica&) = delete;
  Replica& operator=(const Replica&) = delete;

  ReplicaId id() const { return id_; }
  ViewNumber view() const { return view_; }
  ReplicaId leader() const { return leader_; }
  bool is_leader() const { return leader_ == id_; }
  bool in_view_change() const { return vc_.has_value(); }
  const std::vector<ExecRecord>& exec_log() const { return exec_log_; }
  const KvStore& kv() const { return kv_; }
  Enclave* enclave() { return enclave_.get(); }
  const Enclave* enclave() const { return enclave_.get(); }
  bool alive() const { return enclave_ != nullptr; }
  std::size_t executed_requests() const { return executed_.size(); }

  virtual void on_message(NodeId src, const Message& msg);
  virtual void on_timer(std::uint64_t token);
  // Drops the enclave; the replica stops participating.
  void terminate_enclave() { enclave_.reset(); }

 protected:
  struct Entry {
    ProposalMsg proposal;
    bool voted = false;
    std::optional<QuorumCert> qc;
    std::optional<crypto::Digest> results;  // set once executed
  };

  struct ViewLog {
    ReplicaId leader = 0;
    std::map<std::uint64_t, Entry> entries;
    std::optional<ProposalMsg> nv_proposal;
    std::optional<ViewTransition> transition;
  };

  struct Round {
    CounterValue counter;
    MsgKind vote_kind = MsgKind::VoteForCommit;
    crypto::Digest commitment;
    std::map<std::uint32_t, crypto::Fp> shares;
    std::vector<std::uint32_t> arrival;
  };

  struct ViewChangeState {
    ViewNumber target = 0;
    std::uint32_t attempts = 0;
    std::uint64_t timer = 0;
  };

  struct NewViewState {
    ViewNumber target = 0;
    HistoryAnchor anchor;
    std::optional<SecretEnvelope> envelope;
    std::optional<ProposalMsg> proposal;
    bool proposed = false;
  };

  struct NewViewVote {
    NodeId leader = 0;
    crypto::Digest anchor;
    VoteMsg vote;
  };

  struct CachedReply {
    Bytes result;
    std::optional<std::pair<QuorumCert, SignedCounter>> commit_proof;
    std::optional<std::pair<QuorumCert, SignedCounter>> exec_proof;
    Subscription subscription = Subscription::Commitment;
  };

  using RequestKey = std::pair<NodeId, std::uint64_t>;

  // Outgoing traffic; overridable so faulty hosts can tamper with it.
  virtual void send(NodeId to, const Message& msg);
  virtual void broadcast_proposal(MsgKind kind, const ProposalMsg& p, const SecretEnvelope& env);
  virtual void mutate_body(ProposalBody&) {}
  void note(std::string_view what) { env_.on_note(id_, what); }

  // Normal case.
  virtual void handle_request(NodeId src, const ClientRequest& req);
  void handle_proposal(NodeId src, MsgKind kind, const ProposalMsg& p);
  void handle_vote(NodeId src, MsgKind kind, const VoteMsg& v);
  void handle_decide(NodeId src, const DecideMsg& d);
  void handle_fetch(NodeId src, const FetchMsg& f);
  void handle_proposals(NodeId src, const ProposalsMsg& p);
  void handle_reply_request(NodeId client, const ClientRequest& req);

  void try_propose();
  void propose(MsgKind kind, std::vector<ClientRequest> batch, std::optional<QuorumCert> justify,
               std::optional<crypto::Digest> result);
  void advance();
  bool vote_on(Entry& e);
  bool process_qc(const QuorumCert& qc, const std::optional<crypto::Digest>& result, bool accountable);
  void commit_through(std::uint64_t counter);
  void execute(Entry& e);
  void try_form_qc();
  void on_qc_formed(const Round& r, const QuorumCert& qc);
  void send_proofs(const Entry& e, ProofKind kind, const QuorumCert& qc, const SignedCounter& commitment);
  bool well_formed(const ProposalMsg& p) const;
  Entry* entry(std::uint64_t counter);
  bool have_prefix(std::uint64_t through) const;
  std::uint64_t first_missing() const;
  void request_missing(NodeId from, std::uint64_t first, std::uint64_t last);
  void maybe_catch_up(NodeId src, ViewNumber seen);
  std::uint64_t arm_timer(std::uint64_t delay);

  // View change.
  void request_view_change(std::string_view reason, std::optional<ViewNumber> target = {});
  std::optional<MessageLogProof> my_proof();
  void send_rvc(ViewNumber target);
  void arm_view_change_timer();
  void on_view_change_timeout();
  void handle_rvc(NodeId src, const RequestViewChangeMsg& m);
  void try_start_new_view(ViewNumber target);
  void continue_new_view();
  void handle_view_change(NodeId src, const ViewChangeMsg& m);
  void resume_view_change_vote();
  void handle_new_view(NodeId src, const ViewTransition& t);
  bool transition_valid(const ViewTransition& t);
  void apply_transition(const ViewTransition& t);
  void finish_new_view(const QuorumCert& qc);
  void enter_view(ViewNumber target, const crypto::Digest& qc_digest);
  ReplicaId leader_for(ViewNumber target);

  ReplicaConfig cfg_;
  ReplicaId id_;
  std::unique_ptr<Enclave> enclave_;
  std::shared_ptr<const Pki> pki_;
  ReplicaEnv& env_;

  ViewNumber view_ = 0;
  ReplicaId leader_ = 0;
  crypto::Digest view_qc_digest_;  // QC digest that opened the current view
  std::map<ViewNumber, ViewLog> logs_;
  std::uint64_t exec_next_ = 0;  // next counter to execute in the current view
  std::vector<ExecRecord> exec_log_;
  KvStore kv_;
  std::map<RequestKey, CachedReply> executed_;
  std::optional<SignedCounter> last_voted_;

  // Leader state.
  std::deque<ClientRequest> queue_;
  std::set<RequestKey> queued_;
  std::optional<Round> round_;
  std::map<std::uint64_t, SecretEnvelope> envelopes_;
  std::optional<QuorumCert> last_qc_;
  std::set<std::uint32_t> suspects_;  // share indices seen with bad shares

  // Follower request timers.
  std::map<RequestKey, std::pair<ClientRequest, std::uint64_t>> pending_;
  std::map<std::uint64_t, RequestKey> request_timers_;

  // View change state.
  std::optional<ViewChangeState> vc_;
  std::optional<MessageLogProof> my_proof_;
  std::map<ReplicaId, MessageLogProof> proofs_;
  std::optional<NewViewState> nv_;
  std::optional<NewViewVote> nv_vote_;
  std::optional<std::uint64_t> grace_timer_;  // next leader waits briefly for more proofs
  ViewNumber grace_target_ = 0;
  std::optional<ViewNumber> grace_done_;
  std::optional<HistoryAnchor> adopted_;
  std::optional<std::pair<NodeId, ViewChangeMsg>> pending_view_change_;
  std::optional<std::pair<NodeId, ViewTransition>> pending_transition_;

  // Normal-case messages from views not entered yet, replayed on entry.
  std::deque<std::pair<NodeId, Message>> future_;

  std::uint64_t next_token_ = 1;
  std::uint64_t last_fetch_tick_ = 0;
  bool fetched_once_ = false;
  ViewNumber catch_up_hint_ = 0;
  NodeId catch_up_source_ = 0;
};

}  // namespace tbft

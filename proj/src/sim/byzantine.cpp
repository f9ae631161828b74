#include "tbft/sim/byzantine.hpp"

namespace tbft::sim {

ByzantineReplica::ByzantineReplica(ReplicaConfig cfg, std::unique_ptr<Enclave> enclave,
                                   std::shared_ptr<const Pki> pki, ReplicaEnv& env, Behaviors behaviors,
                                   crypto::Prg rng)
    : Replica(cfg, std::move(enclave), std::move(pki), env), behaviors_(behaviors), rng_(std::move(rng)) {}

bool ByzantineReplica::active(const Window& w) {
  if (!w.enabled || !enclave_) return false;
  const auto now = env_.now();
  if (now < w.from || now > w.to) return false;
  return w.probability >= 1.0 || rng_.chance(w.probability);
}

void ByzantineReplica::on_message(NodeId src, const Message& msg) {
  Replica::on_message(src, msg);
  if (!enclave_) return;
  if (msg.kind != MsgKind::Prepare && msg.kind != MsgKind::Commit) return;
  const auto& p = std::get<ProposalMessage>(msg.body).proposal;
  if (!p.share) return;
  last_proposal_ = p;
  if (active(behaviors_.double_vote)) {
    // A second vote for a counter the enclave already passed.
    note("double-vote attempt at " + p.body.counter.str());
    (void)enclave_->verify_counter(p.leader_sig, *p.share);
  }
  if (behaviors_.log_rollback.enabled) try_rollback();
}

void ByzantineReplica::try_rollback() {
  if (!active(behaviors_.log_rollback)) return;
  if (rolled_back_in_ == view_ || !last_voted_ || last_voted_->counter.view != view_) return;
  if (last_voted_->counter.counter < 1) return;
  // Take a log proof now, then keep trying to vote and later present the stale proof.
  auto proof = enclave_->get_highest_message(last_voted_);
  rolled_back_in_ = view_;
  if (!proof) return;
  note("log-rollback: pre-generated proof at " + proof->proof_counter.str());
  const auto target = view_ + 1;
  const auto to = leader_for(target);
  if (to != id_) send(to, Message{MsgKind::RequestViewChange, RequestViewChangeMsg{target, *proof}});
  if (last_proposal_ && last_proposal_->share) {
    (void)enclave_->verify_counter(last_proposal_->leader_sig, *last_proposal_->share);
  }
}

void ByzantineReplica::send(NodeId to, const Message& msg) {
  if (msg.kind == MsgKind::Decide && active(behaviors_.fake_qc)) {
    auto d = std::get<DecideMsg>(msg.body);
    d.qc.secret = crypto::Fp::random(rng_);
    note("fake-qc: forged Decide secret");
    Replica::send(to, Message{MsgKind::Decide, d});
    return;
  }
  const bool vote = msg.kind == MsgKind::VoteForCommit || msg.kind == MsgKind::VoteForDecide;
  if (vote && to != id_ && active(behaviors_.double_vote)) {
    // Forged share first; the leader keeps the first share per index.
    auto forged = std::get<VoteMsg>(msg.body);
    forged.share.value = crypto::Fp::random(rng_);
    note("double-vote: forged share at " + forged.counter.str());
    Replica::send(to, Message{msg.kind, forged});
    Replica::send(to, msg);
    return;
  }
  Replica::send(to, msg);
}

void ByzantineReplica::mutate_body(ProposalBody& body) {
  if (body.justify && active(behaviors_.fake_qc)) {
    body.justify->secret = crypto::Fp::random(rng_);
    note("fake-qc: forged justify at " + body.justify->counter.str());
  }
}

void ByzantineReplica::broadcast_proposal(MsgKind kind, const ProposalMsg& p, const SecretEnvelope& env) {
  if (!active(behaviors_.equivocate)) {
    Replica::broadcast_proposal(kind, p, env);
    return;
  }
  // Ask the enclave for a second, conflicting proposal. It can only bind the next counter.
  ProposalBody alt = p.body;
  alt.batch.clear();
  alt.result.reset();
  alt.counter = enclave_->current();
  auto env2 = enclave_->generate_secret(alt.counter);
  if (!env2) {
    Replica::broadcast_proposal(kind, p, env);
    return;
  }
  alt.secret_commitment = env2->commitment.payload;
  auto sc2 = enclave_->create_counter(alt.digest());
  note("equivocation: second proposal bound to " + sc2.counter.str() + " instead of " +
       p.body.counter.str());
  ProposalMsg q{alt, sc2, env2->commitment, std::nullopt};
  for (NodeId j = 0; j < cfg_.n; ++j) {
    if (j == id_) continue;
    if (j % 2 == 0) {
      ProposalMsg a = p;
      a.share = env.shares[j];
      send(j, Message{kind, ProposalMessage{std::move(a)}});
    } else {
      ProposalMsg b = q;
      b.share = env2->shares[j];
      send(j, Message{kind, ProposalMessage{std::move(b)}});
    }
  }
}

void ByzantineReplica::run_enclave_calls(const std::vector<std::string>& calls) {
  if (!enclave_) return;
  for (const auto& c : calls) {
    note("scheduled enclave call " + c);
    if (c == "create_counter") {
      Writer w;
      w.str("scheduled").u64(rng_.next64());
      (void)enclave_->create_counter(crypto::sha256(w.data()));
    } else if (c == "generate_secret") {
      (void)enclave_->generate_secret(enclave_->current());
    } else if (c == "get_highest_message") {
      std::optional<SignedCounter> h;
      if (last_voted_ && enclave_->last_validated() == last_voted_->counter) h = last_voted_;
      (void)enclave_->get_highest_message(h);
    } else if (c == "update_view") {
      enclave_->update_view();
    } else if (c == "replay_vote") {
      if (last_proposal_ && last_proposal_->share) {
        (void)enclave_->verify_counter(last_proposal_->leader_sig, *last_proposal_->share);
      }
    }
  }
}

}  // namespace tbft::sim

#include <algorithm>
#include <limits>

#include "tbft/protocol/replica.hpp"

namespace tbft {

ReplicaId Replica::leader_for(ViewNumber target) {
  if (target == view_) return leader_;
  return enclave_->elect_leader(target, view_qc_digest_);
}

void Replica::request_view_change(std::string_view reason, std::optional<ViewNumber> target) {
  if (!enclave_ || vc_) return;
  const ViewNumber t = target.value_or(view_ + 1);
  if (!my_proof()) {
    note("cannot produce a log proof");
    return;
  }
  vc_ = ViewChangeState{t, 0, 0};
  round_.reset();
  env_.on_view_change_request(id_, t, reason);
  send_rvc(t);
  arm_view_change_timer();
}

std::optional<MessageLogProof> Replica::my_proof() {
  if (my_proof_) return my_proof_;
  std::optional<SignedCounter> highest;
  if (adopted_) {
    highest = adopted_->highest;
  } else if (last_voted_ && enclave_->last_validated() == last_voted_->counter) {
    highest = last_voted_;
  }
  auto r = enclave_->get_highest_message(highest);
  if (!r) return std::nullopt;
  my_proof_ = *r;
  return my_proof_;
}

void Replica::send_rvc(ViewNumber target) {
  // A replica that joined by voting for a new view may not hold a proof yet.
  if (!my_proof()) return;
  RequestViewChangeMsg m{target, *my_proof_};
  const auto to = leader_for(target);
  if (to == id_) {
    handle_rvc(id_, m);
  } else {
    send(to, Message{MsgKind::RequestViewChange, m});
  }
}

void Replica::arm_view_change_timer() {
  const auto shift = std::min(vc_->attempts, cfg_.max_backoff_exponent);
  vc_->timer = arm_timer(cfg_.view_change_timeout << shift);
}

void Replica::on_view_change_timeout() {
  ++vc_->attempts;
  // Retransmit whatever the stalled attempt is waiting for.
  if (nv_vote_) send(nv_vote_->leader, Message{MsgKind::VoteForNewView, nv_vote_->vote});
  if (nv_ && nv_->proposed && round_) {
    for (NodeId j = 0; j < cfg_.n; ++j) {
      if (j == id_) continue;
      ProposalMsg q = *nv_->proposal;
      q.share = nv_->envelope->shares[j];
      send(j, Message{MsgKind::ViewChange, ViewChangeMsg{nv_->anchor, std::move(q)}});
    }
  }
  vc_->target += 1;
  send_rvc(vc_->target);
  arm_view_change_timer();
}

void Replica::handle_rvc(NodeId src, const RequestViewChangeMsg& m) {
  const auto pv = m.proof.proof_counter.view;
  if (pv > view_) {
    maybe_catch_up(src, pv);
    return;
  }
  if (pv < view_ || m.target <= view_ || m.proof.issuer != src) return;
  if (leader_for(m.target) != id_) return;
  if (!proof_well_formed(m.proof, *pki_, leader_, view_)) return;
  proofs_[src] = m.proof;
  if (!vc_) {
    const auto others = proofs_.size() - proofs_.count(id_);
    if (others >= cfg_.f) request_view_change("joined", m.target);
    if (!vc_) return;
  }
  try_start_new_view(m.target);
}

void Replica::try_start_new_view(ViewNumber target) {
  if (!vc_ || nv_ || !my_proof_ || enclave_->new_view_voted()) return;
  if (target <= view_ || leader_for(target) != id_) return;
  proofs_[id_] = *my_proof_;
  if (proofs_.size() < cfg_.f + 1) return;
  if (proofs_.size() < cfg_.n && grace_done_ != target) {
    if (!grace_timer_) {
      grace_target_ = target;
      grace_timer_ = arm_timer(2 * cfg_.delta);
    }
    return;
  }
  std::vector<MessageLogProof> list;
  list.reserve(proofs_.size());
  for (const auto& [_, p] : proofs_) list.push_back(p);
  auto anchor = enclave_->merge_highest_messages(list, target);
  if (!anchor) {
    note("merge refused");
    return;
  }
  for (const auto& p : list) env_.on_log_accepted(id_, p);
  adopted_ = *anchor;
  nv_ = NewViewState{target, *anchor, std::nullopt, std::nullopt, false};
  vc_->target = std::max(vc_->target, target);
  continue_new_view();
}

void Replica::continue_new_view() {
  if (!nv_ || nv_->proposed || !enclave_) return;
  const auto& h = nv_->anchor.highest;
  if (h && !have_prefix(h->counter.counter)) {
    // Someone whose proof reached the highest entry has the whole prefix.
    for (const auto& [id, p] : proofs_) {
      if (id != id_ && p.highest && p.highest->counter == h->counter) {
        request_missing(id, first_missing(), h->counter.counter);
        break;
      }
    }
    return;
  }
  const auto cv = enclave_->current();
  ProposalBody b;
  b.kind = ProposalKind::NewView;
  b.counter = cv;
  b.anchor = nv_->anchor.seal.payload;
  auto env = enclave_->generate_secret(cv);
  if (!env) {
    note("generate_secret refused");
    return;
  }
  b.secret_commitment = env->commitment.payload;
  auto sc = enclave_->create_counter(b.digest());
  ProposalMsg p{b, sc, env->commitment, std::nullopt};
  logs_[view_].nv_proposal = p;
  nv_->envelope = *env;
  nv_->proposal = p;
  nv_->proposed = true;
  round_ = Round{cv, MsgKind::VoteForNewView, env->commitment.payload, {}, {}};
  for (NodeId j = 0; j < cfg_.n; ++j) {
    if (j == id_) continue;
    ProposalMsg q = p;
    q.share = env->shares[j];
    send(j, Message{MsgKind::ViewChange, ViewChangeMsg{nv_->anchor, std::move(q)}});
  }
  auto mine = enclave_->verify_counter(sc, env->shares[id_]);
  if (mine) handle_vote(id_, MsgKind::VoteForNewView, VoteMsg{cv, mine->share});
}

void Replica::handle_view_change(NodeId src, const ViewChangeMsg& m) {
  const auto& a = m.anchor;
  const auto old = a.seal.counter.view;
  if (old > view_) {
    maybe_catch_up(src, old);
    return;
  }
  if (old < view_ || a.target_view <= view_) return;
  if (nv_vote_ && nv_vote_->anchor == a.seal.payload && nv_vote_->leader == src) {
    send(src, Message{MsgKind::VoteForNewView, nv_vote_->vote});
    return;
  }
  if (enclave_->new_view_voted()) return;
  if (a.seal.signer != src || leader_for(a.target_view) != src) return;
  const auto& p = m.proposal;
  if (p.body.kind != ProposalKind::NewView || p.leader_sig.signer != src || !p.share ||
      p.body.anchor != a.seal.payload || p.body.counter != a.seal.counter.next() || !well_formed(p)) {
    return;
  }
  pending_view_change_ = {src, m};
  resume_view_change_vote();
}

void Replica::resume_view_change_vote() {
  if (!pending_view_change_ || !enclave_) return;
  const auto src = pending_view_change_->first;
  const auto& m = pending_view_change_->second;
  const auto& h = m.anchor.highest;
  if (h && !have_prefix(h->counter.counter)) {
    request_missing(src, first_missing(), h->counter.counter);
    return;
  }
  const auto msg = m;
  pending_view_change_.reset();
  if (enclave_->new_view_voted()) return;
  if (auto st = enclave_->sync_with_highest(msg.anchor); !st) {
    note("sync refused");
    return;
  }
  adopted_ = msg.anchor;
  round_.reset();
  auto r = enclave_->verify_counter(msg.proposal.leader_sig, *msg.proposal.share);
  if (!r) {
    note("new-view vote refused");
    return;
  }
  logs_[view_].nv_proposal = msg.proposal;
  VoteMsg v{msg.proposal.body.counter, r->share};
  nv_vote_ = NewViewVote{src, msg.anchor.seal.payload, v};
  send(src, Message{MsgKind::VoteForNewView, v});
  const auto t = msg.anchor.target_view;
  if (!vc_) {
    vc_ = ViewChangeState{t, 0, 0};
    arm_view_change_timer();
  } else {
    vc_->target = std::max(vc_->target, t);
  }
}

bool Replica::transition_valid(const ViewTransition& t) {
  const auto& a = t.anchor;
  const auto tv = a.target_view;
  if (tv <= view_) return false;
  const auto next = leader_for(tv);
  const auto& seal = a.seal;
  if (seal.signer != next || seal.purpose != Purpose::HistoryAnchor || seal.counter.view != view_ ||
      seal.counter.counter != anchor_counter_for(a.highest) ||
      seal.payload != HistoryAnchor::digest_for(a.highest, tv) || !pki_->verify(seal)) {
    return false;
  }
  if (a.highest) {
    const auto& h = *a.highest;
    if (h.purpose != Purpose::Proposal || h.signer != leader_ || h.counter.view != view_ ||
        !pki_->verify(h)) {
      return false;
    }
  }
  const auto& com = t.commitment;
  return com.purpose == Purpose::SecretCommitment && com.signer == next &&
         com.counter == seal.counter.next() && pki_->verify(com) && t.qc.counter == com.counter &&
         secret_digest(t.qc.secret) == com.payload;
}

void Replica::handle_new_view(NodeId src, const ViewTransition& t) {
  const auto old = t.anchor.seal.counter.view;
  if (old > view_) {
    maybe_catch_up(src, old);
    return;
  }
  if (old < view_ || !transition_valid(t)) return;
  const auto& h = t.anchor.highest;
  if (h && !have_prefix(h->counter.counter)) {
    pending_transition_ = {src, t};
    request_missing(src, first_missing(), h->counter.counter);
    return;
  }
  apply_transition(t);
}

void Replica::apply_transition(const ViewTransition& t) {
  auto& log = logs_[view_];
  log.transition = t;
  std::vector<ClientRequest> newly_proven;
  if (t.anchor.highest) {
    const auto last = t.anchor.highest->counter.counter;
    commit_through(last);
    // Requests executed without their own QC are proven by the view-change QC.
    const auto proof = std::make_pair(t.qc, t.commitment);
    for (auto& [c, e] : log.entries) {
      if (c > last) break;
      for (const auto& req : e.proposal.body.batch) {
        auto it = executed_.find({req.client, req.request_id});
        if (it == executed_.end()) continue;
        if (!it->second.commit_proof) {
          it->second.commit_proof = proof;
          newly_proven.push_back(req);
        }
        if (!it->second.exec_proof) it->second.exec_proof = proof;
      }
    }
  }
  enter_view(t.anchor.target_view, t.commitment.payload);
  if (is_leader()) {
    for (const auto& req : newly_proven) handle_reply_request(req.client, req);
  }
}

void Replica::finish_new_view(const QuorumCert& qc) {
  if (!nv_ || !nv_->envelope) return;
  ViewTransition t{nv_->anchor, nv_->envelope->commitment, qc};
  for (NodeId j = 0; j < cfg_.n; ++j) {
    if (j != id_) send(j, Message{MsgKind::NewView, NewViewMsg{t}});
  }
  apply_transition(t);
}

void Replica::enter_view(ViewNumber target, const crypto::Digest& qc_digest) {
  const auto next = leader_for(target);
  while (enclave_->current().view < target) enclave_->update_view();
  view_ = target;
  leader_ = next;
  view_qc_digest_ = qc_digest;
  logs_[target].leader = next;

  exec_next_ = 0;
  last_voted_.reset();
  queue_.clear();
  queued_.clear();
  round_.reset();
  envelopes_.clear();
  last_qc_.reset();
  vc_.reset();
  my_proof_.reset();
  proofs_.clear();
  nv_.reset();
  nv_vote_.reset();
  adopted_.reset();
  pending_view_change_.reset();
  pending_transition_.reset();
  grace_timer_.reset();
  grace_done_.reset();
  fetched_once_ = false;
  env_.on_view(id_, target, next);

  request_timers_.clear();
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (executed_.count(it->first) != 0) {
      it = pending_.erase(it);
      continue;
    }
    auto& [req, token] = it->second;
    if (is_leader()) {
      if (queued_.insert(it->first).second) queue_.push_back(req);
    } else {
      send(leader_, Message{MsgKind::Request, RequestMsg{req}});
    }
    token = arm_timer(cfg_.view_change_timeout);
    request_timers_[token] = it->first;
    ++it;
  }
  auto stashed = std::move(future_);
  future_.clear();
  for (auto& [src, msg] : stashed) on_message(src, msg);
  if (catch_up_hint_ > view_) {
    send(catch_up_source_,
         Message{MsgKind::FetchProposals, FetchMsg{view_, 0, std::numeric_limits<std::uint64_t>::max()}});
  }
  try_propose();
}

}  // namespace tbft

#include "tbft/protocol/replica.hpp"

#include <algorithm>
#include <limits>

namespace tbft {

namespace {

MsgKind vote_kind_for(const ProposalBody& b, Mode mode) {
  if (b.kind == ProposalKind::NewView) return MsgKind::VoteForNewView;
  if (mode == Mode::Basic && b.batch.empty() && b.justify) return MsgKind::VoteForDecide;
  return MsgKind::VoteForCommit;
}

std::string_view phase_name(MsgKind vote_kind) {
  switch (vote_kind) {
    case MsgKind::VoteForCommit: return "commit";
    case MsgKind::VoteForDecide: return "execute";
    case MsgKind::VoteForNewView: return "new-view";
    default: return "other";
  }
}

// Lagrange evaluation of the polynomial through `pts` at x.
crypto::Fp lagrange_at(const std::vector<crypto::Share>& pts, std::uint32_t x) {
  crypto::Fp acc;
  const auto X = crypto::Fp::from_u64(x);
  for (const auto& si : pts) {
    crypto::Fp num(1), den(1);
    const auto xi = crypto::Fp::from_u64(si.index);
    for (const auto& sj : pts) {
      if (sj.index == si.index) continue;
      const auto xj = crypto::Fp::from_u64(sj.index);
      num *= X - xj;
      den *= xi - xj;
    }
    acc += si.value * num * den.inverse();
  }
  return acc;
}

}  // namespace

Replica::Replica(ReplicaConfig cfg, std::unique_ptr<Enclave> enclave, std::shared_ptr<const Pki> pki,
                 ReplicaEnv& env)
    : cfg_(cfg), id_(enclave->id()), enclave_(std::move(enclave)), pki_(std::move(pki)), env_(env) {
  leader_ = enclave_->view_leader();
  view_qc_digest_ = genesis_digest();
  logs_[0].leader = leader_;
}

void Replica::send(NodeId to, const Message& msg) { env_.send(id_, to, msg); }

std::uint64_t Replica::arm_timer(std::uint64_t delay) {
  auto token = next_token_++;
  env_.set_timer(id_, delay, token);
  return token;
}

void Replica::on_message(NodeId src, const Message& msg) {
  if (!enclave_) return;
  std::optional<ViewNumber> msg_view;
  if (msg.kind == MsgKind::Prepare || msg.kind == MsgKind::Commit) {
    msg_view = std::get<ProposalMessage>(msg.body).proposal.body.counter.view;
  } else if (msg.kind == MsgKind::Decide) {
    msg_view = std::get<DecideMsg>(msg.body).qc.counter.view;
  }
  if (msg_view && *msg_view > view_) {
    constexpr std::size_t kMaxFuture = 256;
    if (*msg_view <= view_ + 4 && future_.size() < kMaxFuture) future_.emplace_back(src, msg);
    maybe_catch_up(src, *msg_view);
    return;
  }
  switch (msg.kind) {
    case MsgKind::Request: handle_request(src, std::get<RequestMsg>(msg.body).request); break;
    case MsgKind::Prepare:
    case MsgKind::Commit: handle_proposal(src, msg.kind, std::get<ProposalMessage>(msg.body).proposal); break;
    case MsgKind::VoteForCommit:
    case MsgKind::VoteForDecide:
    case MsgKind::VoteForNewView: handle_vote(src, msg.kind, std::get<VoteMsg>(msg.body)); break;
    case MsgKind::Decide: handle_decide(src, std::get<DecideMsg>(msg.body)); break;
    case MsgKind::RequestViewChange: handle_rvc(src, std::get<RequestViewChangeMsg>(msg.body)); break;
    case MsgKind::ViewChange: handle_view_change(src, std::get<ViewChangeMsg>(msg.body)); break;
    case MsgKind::NewView: handle_new_view(src, std::get<NewViewMsg>(msg.body).transition); break;
    case MsgKind::FetchProposals: handle_fetch(src, std::get<FetchMsg>(msg.body)); break;
    case MsgKind::Proposals: handle_proposals(src, std::get<ProposalsMsg>(msg.body)); break;
    case MsgKind::Reply: break;
  }
}

void Replica::on_timer(std::uint64_t token) {
  if (!enclave_) return;
  if (vc_ && token == vc_->timer) {
    on_view_change_timeout();
    return;
  }
  if (grace_timer_ && token == *grace_timer_) {
    grace_timer_.reset();
    grace_done_ = grace_target_;
    try_start_new_view(grace_target_);
    return;
  }
  auto it = request_timers_.find(token);
  if (it == request_timers_.end()) return;
  auto key = it->second;
  request_timers_.erase(it);
  auto p = pending_.find(key);
  if (p == pending_.end() || p->second.second != token) return;
  if (executed_.count(key) != 0) {
    pending_.erase(p);
    return;
  }
  request_view_change("request-timeout");
}

// ---------------------------------------------------------------------------
// Requests

void Replica::handle_request(NodeId src, const ClientRequest& req) {
  const RequestKey key{req.client, req.request_id};
  const bool from_client = src >= cfg_.n;
  if (executed_.count(key) != 0) {
    if (from_client || is_leader()) handle_reply_request(req.client, req);
    return;
  }
  if (is_leader() && !vc_) {
    if (queued_.insert(key).second) queue_.push_back(req);
    try_propose();
    return;
  }
  if (!from_client) return;
  if (!is_leader() && !vc_) send(leader_, Message{MsgKind::Request, RequestMsg{req}});
  if (pending_.count(key) == 0) {
    auto token = arm_timer(cfg_.view_change_timeout);
    pending_[key] = {req, token};
    request_timers_[token] = key;
  }
}

void Replica::handle_reply_request(NodeId client, const ClientRequest& req) {
  const auto& cached = executed_.at({req.client, req.request_id});
  auto reply = [&](ProofKind kind, const std::pair<QuorumCert, SignedCounter>& proof) {
    ReplyMsg r;
    r.client = req.client;
    r.request_id = req.request_id;
    r.kind = kind;
    r.result = cached.result;
    r.qc = proof.first;
    r.commitment = proof.second;
    r.leader = leader_;
    r.view = view_;
    send(client, Message{MsgKind::Reply, r});
  };
  if (wants(req.subscription, ProofKind::Commitment) && cached.commit_proof) {
    reply(ProofKind::Commitment, *cached.commit_proof);
  }
  if (wants(req.subscription, ProofKind::Execution) && cached.exec_proof) {
    reply(ProofKind::Execution, *cached.exec_proof);
  }
}

// ---------------------------------------------------------------------------
// Leader: proposing and collecting votes

void Replica::try_propose() {
  if (!enclave_ || !is_leader() || vc_ || nv_ || round_) return;
  if (enclave_->voting_locked() || enclave_->current().view != view_) return;
  if (enclave_->transition_target()) return;

  bool flush = false;
  if (cfg_.mode == Mode::Pipelined && last_qc_) {
    const auto* e = entry(last_qc_->counter.counter);
    flush = e && !e->proposal.body.batch.empty();
  }
  std::vector<ClientRequest> batch;
  while (!queue_.empty() && batch.size() < cfg_.batch_max) {
    auto r = std::move(queue_.front());
    queue_.pop_front();
    if (executed_.count({r.client, r.request_id}) == 0) batch.push_back(std::move(r));
  }
  if (batch.empty() && !flush) return;

  if (cfg_.mode == Mode::Basic) {
    propose(MsgKind::Prepare, std::move(batch), std::nullopt, std::nullopt);
  } else {
    std::optional<crypto::Digest> result;
    if (last_qc_) {
      if (const auto* e = entry(last_qc_->counter.counter)) result = e->results;
    }
    propose(MsgKind::Prepare, std::move(batch), last_qc_, result);
  }
}

void Replica::propose(MsgKind kind, std::vector<ClientRequest> batch, std::optional<QuorumCert> justify,
                      std::optional<crypto::Digest> result) {
  const auto cv = enclave_->current();
  ProposalBody b;
  b.kind = ProposalKind::Normal;
  b.counter = cv;
  b.batch = std::move(batch);
  b.justify = std::move(justify);
  b.result = result;
  if (cfg_.mode == Mode::Pipelined && cv.counter > 0) {
    if (const auto* prev = entry(cv.counter - 1)) b.parent = prev->proposal.body.digest();
  }
  auto env = enclave_->generate_secret(cv);
  if (!env) {
    note("generate_secret refused");
    return;
  }
  b.secret_commitment = env->commitment.payload;
  mutate_body(b);
  auto sc = enclave_->create_counter(b.digest());

  ProposalMsg p{b, sc, env->commitment, std::nullopt};
  auto& e = logs_[view_].entries[cv.counter];
  e = Entry{p, false, {}, {}};
  envelopes_[cv.counter] = *env;
  round_ = Round{cv, vote_kind_for(b, cfg_.mode), env->commitment.payload, {}, {}};
  broadcast_proposal(kind, p, *env);
  e.proposal.share = env->shares[id_];
  vote_on(e);
}

void Replica::broadcast_proposal(MsgKind kind, const ProposalMsg& p, const SecretEnvelope& env) {
  for (NodeId j = 0; j < cfg_.n; ++j) {
    if (j == id_) continue;
    ProposalMsg q = p;
    q.share = env.shares[j];
    send(j, Message{kind, ProposalMessage{std::move(q)}});
  }
}

void Replica::handle_vote(NodeId src, MsgKind kind, const VoteMsg& v) {
  if (!round_ || round_->counter != v.counter || round_->vote_kind != kind) return;
  if (v.share.index != src + 1) return;
  if (!round_->shares.emplace(v.share.index, v.share.value).second) return;
  round_->arrival.push_back(v.share.index);
  if (round_->shares.size() >= cfg_.f + 1) try_form_qc();
}

void Replica::try_form_qc() {
  const std::size_t k = cfg_.f + 1;
  // Shares from replicas caught sending bad shares before go last.
  std::vector<crypto::Share> all;
  for (auto idx : round_->arrival) {
    if (suspects_.count(idx) == 0) all.push_back({idx, round_->shares.at(idx)});
  }
  for (auto idx : round_->arrival) {
    if (suspects_.count(idx) != 0) all.push_back({idx, round_->shares.at(idx)});
  }
  if (all.size() < k) return;

  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  constexpr int kMaxAttempts = 256;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<crypto::Share> subset;
    for (auto i : pick) subset.push_back(all[i]);
    auto secret = crypto::reconstruct(subset, cfg_.f);
    if (secret_digest(secret) == round_->commitment) {
      for (const auto& s : all) {
        if (lagrange_at(subset, s.index) != s.value) suspects_.insert(s.index);
      }
      QuorumCert qc{round_->counter, secret};
      Round r = std::move(*round_);
      round_.reset();
      on_qc_formed(r, qc);
      return;
    }
    // Next k-combination in lexicographic order.
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == all.size() - k + (i - 1)) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

void Replica::on_qc_formed(const Round& r, const QuorumCert& qc) {
  env_.on_qc(id_, qc, phase_name(r.vote_kind));
  if (r.vote_kind == MsgKind::VoteForNewView) {
    finish_new_view(qc);
    return;
  }
  const auto c = qc.counter.counter;
  auto* e = entry(c);
  if (!e) return;
  e->qc = qc;
  commit_through(c);
  const bool has_batch = !e->proposal.body.batch.empty();

  if (r.vote_kind == MsgKind::VoteForDecide) {
    for (NodeId j = 0; j < cfg_.n; ++j) {
      if (j != id_) send(j, Message{MsgKind::Decide, DecideMsg{qc}});
    }
    if (c > 0) {
      if (auto* prev = entry(c - 1); prev && !prev->proposal.body.batch.empty()) {
        send_proofs(*prev, ProofKind::Execution, qc, e->proposal.commitment);
      }
    }
    try_propose();
    return;
  }

  if (has_batch) send_proofs(*e, ProofKind::Commitment, qc, e->proposal.commitment);
  if (cfg_.mode == Mode::Basic) {
    if (has_batch) {
      propose(MsgKind::Commit, {}, qc, e->results);
    } else {
      try_propose();
    }
    return;
  }
  if (c > 0) {
    if (auto* prev = entry(c - 1); prev && !prev->proposal.body.batch.empty()) {
      send_proofs(*prev, ProofKind::Execution, qc, e->proposal.commitment);
    }
  }
  last_qc_ = qc;
  try_propose();
}

void Replica::send_proofs(const Entry& e, ProofKind kind, const QuorumCert& qc,
                          const SignedCounter& commitment) {
  for (const auto& req : e.proposal.body.batch) {
    auto it = executed_.find({req.client, req.request_id});
    if (it == executed_.end()) continue;
    auto& slot = kind == ProofKind::Commitment ? it->second.commit_proof : it->second.exec_proof;
    if (!slot) slot = std::make_pair(qc, commitment);
    if (!wants(req.subscription, kind)) continue;
    ReplyMsg r;
    r.client = req.client;
    r.request_id = req.request_id;
    r.kind = kind;
    r.result = it->second.result;
    r.qc = slot->first;
    r.commitment = slot->second;
    r.leader = leader_;
    r.view = view_;
    send(req.client, Message{MsgKind::Reply, r});
  }
}

// ---------------------------------------------------------------------------
// Followers: proposals, votes, execution

bool Replica::well_formed(const ProposalMsg& p) const {
  const auto& b = p.body;
  const auto& sig = p.leader_sig;
  const auto& com = p.commitment;
  return sig.purpose == Purpose::Proposal && sig.counter == b.counter && sig.payload == b.digest() &&
         com.purpose == Purpose::SecretCommitment && com.signer == sig.signer &&
         com.counter == b.counter && com.payload == b.secret_commitment && pki_->verify(sig) &&
         pki_->verify(com);
}

Replica::Entry* Replica::entry(std::uint64_t counter) {
  auto& entries = logs_[view_].entries;
  auto it = entries.find(counter);
  return it == entries.end() ? nullptr : &it->second;
}

bool Replica::have_prefix(std::uint64_t through) const {
  auto it = logs_.find(view_);
  if (it == logs_.end()) return false;
  const auto& entries = it->second.entries;
  for (std::uint64_t c = 0; c <= through; ++c) {
    if (entries.count(c) == 0) return false;
  }
  return true;
}

std::uint64_t Replica::first_missing() const {
  auto it = logs_.find(view_);
  std::uint64_t c = 0;
  if (it == logs_.end()) return c;
  while (it->second.entries.count(c) != 0) ++c;
  return c;
}

void Replica::handle_proposal(NodeId, MsgKind, const ProposalMsg& p) {
  const auto& b = p.body;
  if (b.kind != ProposalKind::Normal) return;
  if (b.counter.view != view_ || p.leader_sig.signer != leader_) return;
  if (b.counter.counter > enclave_->current().counter + cfg_.window) return;
  if (!well_formed(p)) return;

  auto& entries = logs_[view_].entries;
  auto [it, inserted] = entries.try_emplace(b.counter.counter, Entry{p, false, {}, {}});
  if (!inserted) {
    if (it->second.proposal.body != b) {
      note("conflicting proposal ignored");
      return;
    }
    if (!it->second.proposal.share && p.share) it->second.proposal.share = p.share;
  }
  if (b.justify) process_qc(*b.justify, b.result, true);
  advance();
}

void Replica::advance() {
  if (!enclave_ || vc_) return;
  for (;;) {
    if (enclave_->voting_locked() || enclave_->current().view != view_ ||
        enclave_->transition_target()) {
      return;
    }
    const auto next = enclave_->current().counter;
    auto* e = entry(next);
    if (!e) {
      auto& entries = logs_[view_].entries;
      auto later = entries.upper_bound(next);
      if (later != entries.end() && leader_ != id_) request_missing(leader_, next, later->first - 1);
      return;
    }
    if (e->voted) return;
    if (!e->proposal.share) {
      if (leader_ != id_) request_missing(leader_, next, next);
      return;
    }
    const auto& b = e->proposal.body;
    if (b.justify) {
      if (b.justify->counter != CounterValue{view_, next - 1} || next == 0) {
        note("justify does not cover the previous proposal");
        return;
      }
      auto* prev = entry(next - 1);
      if (!prev) return;
      if (!prev->qc && !process_qc(*b.justify, b.result, true)) return;
      if (b.result && prev->results && *prev->results != *b.result) return;
    }
    if (cfg_.mode == Mode::Pipelined && next > 0 && b.parent) {
      auto* prev = entry(next - 1);
      if (!prev || *b.parent != prev->proposal.body.digest()) {
        note("parent mismatch");
        return;
      }
    }
    if (!vote_on(*e)) return;
  }
}

bool Replica::vote_on(Entry& e) {
  auto r = enclave_->verify_counter(e.proposal.leader_sig, *e.proposal.share);
  if (!r) return false;
  if (r->commitment != e.proposal.body.secret_commitment) {
    note("share commitment differs from proposal");
  }
  e.voted = true;
  last_voted_ = e.proposal.leader_sig;
  const auto kind = vote_kind_for(e.proposal.body, cfg_.mode);
  VoteMsg v{e.proposal.body.counter, r->share};
  const auto to = e.proposal.leader_sig.signer;
  if (to == id_) {
    handle_vote(id_, kind, v);
  } else {
    send(to, Message{kind, v});
  }
  return true;
}

bool Replica::process_qc(const QuorumCert& qc, const std::optional<crypto::Digest>& result,
                         bool accountable) {
  if (qc.counter.view != view_) return false;
  auto* e = entry(qc.counter.counter);
  if (!e) return false;
  if (secret_digest(qc.secret) != e->proposal.body.secret_commitment) {
    if (accountable) request_view_change("invalid-qc");
    return false;
  }
  if (!e->qc) {
    e->qc = qc;
    env_.on_qc(id_, qc, "observed");
  }
  commit_through(qc.counter.counter);
  if (result && e->results && *e->results != *result) {
    if (accountable) request_view_change("result-mismatch");
    return false;
  }
  return true;
}

void Replica::commit_through(std::uint64_t counter) {
  while (exec_next_ <= counter) {
    auto* e = entry(exec_next_);
    if (!e) {
      if (leader_ != id_) request_missing(leader_, exec_next_, counter);
      return;
    }
    execute(*e);
    ++exec_next_;
  }
}

void Replica::execute(Entry& e) {
  const auto& batch = e.proposal.body.batch;
  std::vector<Bytes> results;
  results.reserve(batch.size());
  for (const auto& req : batch) {
    const RequestKey key{req.client, req.request_id};
    auto it = executed_.find(key);
    if (it == executed_.end()) {
      CachedReply c;
      c.result = kv_.apply(req.op);
      c.subscription = req.subscription;
      it = executed_.emplace(key, std::move(c)).first;
    }
    results.push_back(it->second.result);
    if (e.qc && !it->second.commit_proof) {
      it->second.commit_proof = std::make_pair(*e.qc, e.proposal.commitment);
    }
    pending_.erase(key);
  }
  e.results = results_digest(results);
  ExecRecord rec{e.proposal.body.counter, batch_digest(batch), batch.size()};
  exec_log_.push_back(rec);
  env_.on_execute(id_, rec, exec_log_.size() - 1);
}

void Replica::handle_decide(NodeId src, const DecideMsg& d) {
  if (src != leader_) return;
  process_qc(d.qc, std::nullopt, true);
}

// ---------------------------------------------------------------------------
// State transfer

void Replica::request_missing(NodeId from, std::uint64_t first, std::uint64_t last) {
  const auto now = env_.now();
  if (fetched_once_ && now < last_fetch_tick_ + 2 * cfg_.delta) return;
  fetched_once_ = true;
  last_fetch_tick_ = now;
  send(from, Message{MsgKind::FetchProposals, FetchMsg{view_, first, last}});
}

void Replica::maybe_catch_up(NodeId src, ViewNumber seen) {
  if (seen <= view_) return;
  catch_up_hint_ = std::max(catch_up_hint_, seen);
  catch_up_source_ = src;
  request_missing(src, 0, std::numeric_limits<std::uint64_t>::max());
}

void Replica::handle_fetch(NodeId src, const FetchMsg& f) {
  auto it = logs_.find(f.view);
  if (it == logs_.end() || src >= cfg_.n) return;
  const auto& log = it->second;
  ProposalsMsg out;
  out.view = f.view;
  const std::size_t cap = 2 * cfg_.window;
  for (auto e = log.entries.lower_bound(f.from); e != log.entries.end() && e->first <= f.to; ++e) {
    if (out.entries.size() >= cap) break;
    StoredEntry se{e->second.proposal, e->second.qc};
    se.proposal.share.reset();
    if (f.view == view_ && is_leader()) {
      if (auto env = envelopes_.find(e->first); env != envelopes_.end()) {
        se.proposal.share = env->second.shares[src];
      }
    }
    out.entries.push_back(std::move(se));
  }
  out.transition = log.transition;
  if (out.entries.empty() && !out.transition) return;
  send(src, Message{MsgKind::Proposals, std::move(out)});
}

void Replica::handle_proposals(NodeId src, const ProposalsMsg& p) {
  if (p.view != view_) return;
  auto& log = logs_[view_];
  for (const auto& se : p.entries) {
    const auto& prop = se.proposal;
    if (prop.body.kind != ProposalKind::Normal || prop.body.counter.view != view_ ||
        prop.leader_sig.signer != log.leader || !well_formed(prop)) {
      continue;
    }
    auto [it, inserted] = log.entries.try_emplace(prop.body.counter.counter, Entry{prop, false, {}, {}});
    if (!inserted && !it->second.proposal.share && prop.share && it->second.proposal.body == prop.body) {
      it->second.proposal.share = prop.share;
    }
  }
  fetched_once_ = false;  // allow an immediate follow-up fetch
  for (const auto& se : p.entries) {
    if (se.qc) process_qc(*se.qc, std::nullopt, false);
  }
  advance();
  resume_view_change_vote();
  continue_new_view();
  if (pending_transition_) {
    auto [s, t] = *pending_transition_;
    pending_transition_.reset();
    handle_new_view(s, t);
  }
  if (p.transition && p.view == view_) handle_new_view(src, *p.transition);
}

}  // namespace tbft

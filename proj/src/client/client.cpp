#include "tbft/client/client.hpp"

#include <algorithm>

namespace tbft {

bool verify_proof(const ReplyMsg& reply, const Pki& pki) {
  const auto& com = reply.commitment;
  if (com.purpose != Purpose::SecretCommitment || com.signer >= pki.size()) return false;
  if (reply.qc.counter != com.counter) return false;
  if (!pki.verify(com)) return false;
  return secret_digest(reply.qc.secret) == com.payload;
}

Client::Client(NodeId id, ClientConfig cfg, std::shared_ptr<const Pki> pki, ClientEnv& env)
    : id_(id), cfg_(cfg), pki_(std::move(pki)), env_(env) {}

void Client::enqueue(Operation op) {
  backlog_.push_back(std::move(op));
  fill_window();
}

void Client::fill_window() {
  while (!backlog_.empty() && pending_.size() < cfg_.window) {
    auto op = std::move(backlog_.front());
    backlog_.pop_front();
    submit(std::move(op));
  }
}

std::uint64_t Client::submit(Operation op) {
  const auto rid = next_request_++;
  Pending p;
  p.request = ClientRequest{id_, rid, std::move(op), cfg_.subscription};
  p.submitted = env_.now();
  p.timeout = cfg_.timeout;
  p.timer = next_token_++;
  env_.on_submit(id_, rid);
  env_.send(id_, leader_, Message{MsgKind::Request, RequestMsg{p.request}});
  env_.set_timer(id_, p.timeout, p.timer);
  timers_[p.timer] = rid;
  pending_.emplace(rid, std::move(p));
  return rid;
}

bool Client::satisfied(const Pending& p) const {
  switch (cfg_.subscription) {
    case Subscription::Commitment: return p.commitment;
    case Subscription::Execution: return p.execution;
    case Subscription::Both: return p.commitment && p.execution;
  }
  return false;
}

void Client::on_message(NodeId src, const Message& msg) {
  if (msg.kind != MsgKind::Reply) return;
  const auto& r = std::get<ReplyMsg>(msg.body);
  if (r.client != id_ || src >= cfg_.n) return;
  auto it = pending_.find(r.request_id);
  if (it == pending_.end()) return;
  auto& p = it->second;
  const bool ok = verify_proof(r, *pki_);
  env_.on_proof(id_, r, ok, env_.now() - p.submitted);
  if (!ok) return;
  if (r.leader < cfg_.n) leader_ = r.leader;
  if (r.kind == ProofKind::Commitment) p.commitment = true;
  if (r.kind == ProofKind::Execution) p.execution = true;
  if (!satisfied(p)) return;
  timers_.erase(p.timer);
  pending_.erase(it);
  ++completed_;
  fill_window();
}

void Client::on_timer(std::uint64_t token) {
  auto t = timers_.find(token);
  if (t == timers_.end()) return;
  const auto rid = t->second;
  timers_.erase(t);
  auto it = pending_.find(rid);
  if (it == pending_.end()) return;
  auto& p = it->second;
  for (NodeId j = 0; j < cfg_.n; ++j) {
    env_.send(id_, j, Message{MsgKind::Request, RequestMsg{p.request}});
  }
  p.timeout = std::min(p.timeout * 2, cfg_.max_timeout);
  p.timer = next_token_++;
  timers_[p.timer] = rid;
  env_.set_timer(id_, p.timeout, p.timer);
  env_.on_resend(id_, rid, p.timeout);
}

}  // namespace tbft

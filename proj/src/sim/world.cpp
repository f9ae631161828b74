#include "tbft/sim/world.hpp"

#include <algorithm>

namespace tbft::sim {

namespace {

std::string_view purpose_name(Purpose p) {
  switch (p) {
    case Purpose::Proposal: return "proposal";
    case Purpose::SecretCommitment: return "commitment";
    case Purpose::HistoryAnchor: return "anchor";
  }
  return "unknown";
}

std::string highest_str(const std::optional<SignedCounter>& h) { return h ? h->counter.str() : "none"; }

Window window_of(const AdversaryRule& r) { return Window{true, r.from, r.to, r.probability}; }

}  // namespace

World::World(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  auto rng = crypto::Prg::from_seed(cfg_.seed, "tbft.world");
  auto setup_rng = rng.fork("setup");
  auto deployment = trusted_setup(cfg_.n, cfg_.f, cfg_.crypto, setup_rng);
  pki_ = deployment.pki;

  std::vector<std::unique_ptr<Enclave>> enclaves;
  for (auto& s : deployment.secrets) {
    enclaves.push_back(std::make_unique<Enclave>(std::move(s), pki_));
    enclaves.back()->set_observer(this);
  }
  leader_ = enclaves[0]->view_leader();
  resolve_corrupt(rng);
  network_ = std::make_unique<Network>(cfg_, corrupt_, rng.fork("network"));
  metrics_ = std::make_unique<MetricsCollector>(cfg_.n, cfg_.delta, cfg_.mode == Mode::Basic ? "basic" : "pipelined",
                                                corrupt_);

  std::vector<Behaviors> behaviors(cfg_.n);
  for (const auto& r : cfg_.rules) {
    for (auto id : corrupt_) {
      if (r.target.kind == NodeSelector::Kind::Id && r.target.id != id) continue;
      auto& b = behaviors[id];
      switch (r.action) {
        case ActionKind::EquivocateAttempt: b.equivocate = window_of(r); break;
        case ActionKind::DoubleVoteAttempt: b.double_vote = window_of(r); break;
        case ActionKind::FakeQc: b.fake_qc = window_of(r); break;
        case ActionKind::LogRollbackAttempt: b.log_rollback = window_of(r); break;
        default: break;
      }
    }
  }

  ReplicaConfig rc;
  rc.n = cfg_.n;
  rc.f = cfg_.f;
  rc.mode = cfg_.mode;
  rc.delta = cfg_.delta;
  rc.view_change_timeout = 16 * cfg_.delta;
  rc.batch_max = cfg_.batch_max;
  for (ReplicaId i = 0; i < cfg_.n; ++i) {
    if (corrupt_.count(i) != 0) {
      replicas_.push_back(std::make_unique<ByzantineReplica>(rc, std::move(enclaves[i]), pki_, *this, behaviors[i],
                                                             rng.fork("host-" + std::to_string(i))));
    } else {
      replicas_.push_back(std::make_unique<Replica>(rc, std::move(enclaves[i]), pki_, *this));
    }
  }
  views_.assign(cfg_.n, 0);

  ClientConfig cc;
  cc.n = cfg_.n;
  cc.timeout = cfg_.clients.timeout != 0 ? cfg_.clients.timeout : 8 * cfg_.delta;
  cc.max_timeout = std::max<std::uint64_t>(cc.timeout, 64 * cfg_.delta);
  cc.window = cfg_.clients.window;
  cc.subscription = cfg_.clients.subscription;
  for (std::size_t k = 0; k < cfg_.clients.count; ++k) {
    clients_.push_back(std::make_unique<Client>(static_cast<NodeId>(cfg_.n + k), cc, pki_, *this));
  }
}

World::~World() = default;

void World::resolve_corrupt(crypto::Prg& rng) {
  if (!cfg_.corrupt.ids.empty()) {
    corrupt_.insert(cfg_.corrupt.ids.begin(), cfg_.corrupt.ids.end());
    return;
  }
  if (cfg_.corrupt.select == "leader") {
    corrupt_.insert(leader_);
    return;
  }
  if (cfg_.corrupt.select == "followers") {
    std::vector<ReplicaId> pool;
    for (ReplicaId i = 0; i < cfg_.n; ++i) {
      if (i != leader_) pool.push_back(i);
    }
    auto pick = rng.fork("corrupt");
    const auto count = std::min(cfg_.corrupt.count.value_or(cfg_.f), pool.size());
    for (std::size_t k = 0; k < count; ++k) {
      const auto j = k + pick.uniform(pool.size() - k);
      std::swap(pool[k], pool[j]);
      corrupt_.insert(pool[k]);
    }
  }
}

void World::push(Event e) {
  e.seq = seq_++;
  queue_.push(std::move(e));
}

void World::record(std::string kind, std::optional<std::uint32_t> src, std::optional<std::uint32_t> dst,
                   std::optional<CounterValue> counter, std::string digest, std::string note,
                   std::optional<std::uint64_t> tick) {
  TraceRecord r;
  r.tick = tick.value_or(now_);
  r.seq = trace_.size();
  r.kind = std::move(kind);
  r.src = src;
  r.dst = dst;
  r.counter = counter;
  r.digest = std::move(digest);
  r.note = std::move(note);
  trace_.push_back(std::move(r));
}

void World::send(NodeId from, NodeId to, const Message& msg) {
  // Output of a handler leaves one tick after it ran.
  const auto sent = in_handler_ ? now_ + 1 : now_;
  auto bytes = encode(msg);
  const auto id = next_msg_id_++;
  const auto digest = crypto::sha256(bytes).hex();
  const auto what = "kind=" + std::string(to_string(msg.kind)) + " id=" + std::to_string(id);
  const auto counter = counter_of(msg);
  record("send", from, to, counter, digest, what, sent);
  metrics_->sent(from, to, to_string(msg.kind));

  const auto out = network_->route(sent, from, to, msg.kind, bytes, leader_);
  if (out.dropped) {
    record("drop", from, to, counter, digest, what + " by=" + (out.actions.empty() ? "" : out.actions.back()), sent);
    return;
  }
  for (const auto& a : out.actions) record("adversary", from, to, counter, digest, what + " action=" + a, sent);
  for (const auto& d : out.deliveries) {
    Event e;
    e.tick = d.at;
    e.type = EventType::Deliver;
    e.src = from;
    e.dst = to;
    e.token = id;
    e.bytes = std::make_shared<const Bytes>(d.bytes);
    e.tag = d.tag;
    push(std::move(e));
  }
}

void World::set_timer(NodeId node, std::uint64_t delay, std::uint64_t token) {
  Event e;
  e.tick = now_ + std::max<std::uint64_t>(delay, 1);
  e.type = EventType::Timer;
  e.dst = node;
  e.token = token;
  push(std::move(e));
}

void World::deliver(const Event& e) {
  Message msg;
  std::string what = "id=" + std::to_string(e.token);
  if (!e.tag.empty()) what += " tag=" + e.tag;
  try {
    msg = decode(*e.bytes);
  } catch (const DecodeError&) {
    record("drop", e.src, e.dst, std::nullopt, crypto::sha256(*e.bytes).hex(), what + " reason=malformed");
    return;
  }
  record("deliver", e.src, e.dst, counter_of(msg), crypto::sha256(*e.bytes).hex(),
         "kind=" + std::string(to_string(msg.kind)) + " " + what);
  if (e.dst < cfg_.n) {
    replicas_[e.dst]->on_message(e.src, msg);
  } else {
    clients_[e.dst - cfg_.n]->on_message(e.src, msg);
  }
}

void World::host_action(const AdversaryRule& rule, std::size_t index) {
  for (auto id : corrupt_) {
    if (rule.target.kind == NodeSelector::Kind::Id && rule.target.id != id) continue;
    const auto what = "action=" + std::string(to_string(rule.action)) + " rule=" + std::to_string(index);
    record("adversary", id, std::nullopt, std::nullopt, "", what);
    if (rule.action == ActionKind::TerminateEnclave) {
      replicas_[id]->terminate_enclave();
    } else if (auto* byz = dynamic_cast<ByzantineReplica*>(replicas_[id].get())) {
      byz->run_enclave_calls(rule.calls);
    }
  }
}

Operation World::make_op(NodeId client, std::size_t i) {
  Operation op;
  op.key = "k" + std::to_string(client % 4) + "-" + std::to_string(i % 5);
  Writer w;
  w.u32(client).u64(i);
  const auto seed = crypto::sha256(w.data());
  Bytes payload(cfg_.clients.payload_bytes);
  for (std::size_t b = 0; b < payload.size(); ++b) payload[b] = seed.bytes[b % seed.bytes.size()];
  switch (i % 3) {
    case 0:
      op.type = OpType::Put;
      op.value = std::move(payload);
      break;
    case 1: op.type = OpType::Get; break;
    default:
      op.type = OpType::Noop;
      op.value = std::move(payload);
      op.key.clear();
      break;
  }
  return op;
}

bool World::all_done() const {
  return std::all_of(clients_.begin(), clients_.end(), [](const auto& c) { return c->idle(); });
}

RunResult World::run() {
  std::string corrupt;
  for (auto id : corrupt_) corrupt += (corrupt.empty() ? "" : ",") + std::to_string(id);
  record("header", std::nullopt, std::nullopt, std::nullopt, "",
         "schema=" + std::to_string(kScenarioSchema) + " n=" + std::to_string(cfg_.n) +
             " f=" + std::to_string(cfg_.f) + " delta=" + std::to_string(cfg_.delta) +
             " gst=" + (cfg_.gst ? std::to_string(*cfg_.gst) : "never") +
             " mode=" + (cfg_.mode == Mode::Basic ? "basic" : "pipelined") + " seed=" + std::to_string(cfg_.seed) +
             " crypto=" + (cfg_.crypto == crypto::CryptoMode::Sim ? "sim" : "real") +
             " corrupt=" + (corrupt.empty() ? "none" : corrupt) + " clients=" + std::to_string(clients_.size()) +
             " scenario=" + (cfg_.name.empty() ? "unnamed" : cfg_.name));
  for (ReplicaId i = 0; i < cfg_.n; ++i) {
    record("view", i, std::nullopt, std::nullopt, "", "view=0 leader=" + std::to_string(leader_));
  }

  push(Event{0, 0, EventType::Start, 0, 0, 0, nullptr, {}});
  for (std::size_t i = 0; i < cfg_.rules.size(); ++i) {
    const auto a = cfg_.rules[i].action;
    if (a == ActionKind::TerminateEnclave || a == ActionKind::ScheduleEnclave) {
      push(Event{cfg_.rules[i].at, 0, EventType::Host, 0, 0, i, nullptr, {}});
    }
  }

  RunResult result;
  const std::size_t total = cfg_.clients.count * cfg_.clients.requests;
  while (!queue_.empty()) {
    const auto& top = queue_.top();
    if (top.tick > cfg_.max_ticks) break;
    if (result.completion_tick && top.tick > *result.completion_tick + cfg_.drain_ticks) break;
    Event e = top;
    queue_.pop();
    now_ = e.tick;
    in_handler_ = true;
    switch (e.type) {
      case EventType::Start:
        for (std::size_t k = 0; k < clients_.size(); ++k) {
          for (std::size_t i = 0; i < cfg_.clients.requests; ++i) {
            clients_[k]->enqueue(make_op(clients_[k]->id(), i));
          }
        }
        break;
      case EventType::Deliver: deliver(e); break;
      case EventType::Timer:
        if (e.dst < cfg_.n) {
          replicas_[e.dst]->on_timer(e.token);
        } else {
          clients_[e.dst - cfg_.n]->on_timer(e.token);
        }
        break;
      case EventType::Host: host_action(cfg_.rules[e.token], e.token); break;
    }
    in_handler_ = false;
    if (total > 0 && !result.completed && all_done()) {
      result.completed = true;
      result.completion_tick = now_;
      if (cfg_.drain_ticks == 0) break;
    }
  }
  if (total == 0) result.completed = true;

  result.end_tick = now_;
  result.requests = total;
  result.proven = proven_;
  result.corrupt = corrupt_;
  result.metrics = metrics_->finish(now_);
  record("liveness", std::nullopt, std::nullopt, std::nullopt, "",
         std::string("status=") + (result.completed ? "complete" : "timeout") + " proven=" + std::to_string(proven_) +
             " requests=" + std::to_string(total) + " end=" + std::to_string(now_));
  result.trace = std::move(trace_);
  return result;
}

void World::on_execute(ReplicaId id, const ExecRecord& rec, std::size_t position) {
  record("execute", id, std::nullopt, rec.counter, rec.batch.hex(),
         "pos=" + std::to_string(position) + " ops=" + std::to_string(rec.ops));
  metrics_->executed(id, rec.counter, rec.ops);
}

void World::on_view(ReplicaId id, ViewNumber view, ReplicaId leader) {
  views_[id] = view;
  metrics_->view_entered(id, view);
  record("view", id, std::nullopt, std::nullopt, "", "view=" + std::to_string(view) + " leader=" + std::to_string(leader));
  if (corrupt_.count(id) != 0) return;
  ViewNumber highest = 0;
  for (ReplicaId i = 0; i < cfg_.n; ++i) {
    if (corrupt_.count(i) == 0) highest = std::max(highest, views_[i]);
  }
  if (view == highest) leader_ = leader;
}

void World::on_qc(ReplicaId id, const QuorumCert& qc, std::string_view phase) {
  record("qc", id, std::nullopt, qc.counter, secret_digest(qc.secret).hex(), "phase=" + std::string(phase));
  metrics_->qc(id, qc.counter, phase);
}

void World::on_view_change_request(ReplicaId id, ViewNumber target, std::string_view reason) {
  record("vc_request", id, std::nullopt, std::nullopt, "",
         "target=" + std::to_string(target) + " reason=" + std::string(reason));
}

void World::on_log_accepted(ReplicaId id, const MessageLogProof& p) {
  record("log_accepted", id, p.issuer, p.proof_counter, p.highest ? p.highest->payload.hex() : "",
         "highest=" + highest_str(p.highest));
}

void World::on_note(ReplicaId id, std::string_view what) {
  record("host_note", id, std::nullopt, std::nullopt, "", std::string(what));
}

void World::on_submit(NodeId client, std::uint64_t request_id) {
  record("submit", client, std::nullopt, std::nullopt, "", "req=" + std::to_string(request_id));
  metrics_->submitted(client, request_id);
}

void World::on_proof(NodeId client, const ReplyMsg& r, bool verified, std::uint64_t latency) {
  record("client_proof", client, std::nullopt, r.qc.counter, r.commitment.payload.hex(),
         "req=" + std::to_string(r.request_id) +
             " proof=" + (r.kind == ProofKind::Commitment ? "commitment" : "execution") +
             " verified=" + (verified ? "1" : "0") + " latency=" + std::to_string(latency) +
             " signer=" + std::to_string(r.commitment.signer));
  metrics_->proof(client, r.request_id, r.kind == ProofKind::Execution, verified, latency);
  if (verified) {
    const bool counts = cfg_.clients.subscription == Subscription::Execution ? r.kind == ProofKind::Execution
                                                                                : r.kind == ProofKind::Commitment;
    if (counts) ++proven_;
  }
}

void World::on_resend(NodeId client, std::uint64_t request_id, std::uint64_t next_timeout) {
  record("client_resend", client, std::nullopt, std::nullopt, "",
         "req=" + std::to_string(request_id) + " timeout=" + std::to_string(next_timeout));
}

void World::on_signed(ReplicaId id, const SignedCounter& sc) {
  record("enclave_sign", id, std::nullopt, sc.counter, sc.payload.hex(),
         "purpose=" + std::string(purpose_name(sc.purpose)));
}

void World::on_log_proof(ReplicaId id, const MessageLogProof& p) {
  record("log_proof", id, std::nullopt, p.proof_counter, p.highest ? p.highest->payload.hex() : "",
         "highest=" + highest_str(p.highest));
}

void World::on_share_released(ReplicaId id, const SignedCounter& proposal, const ReleasedShare& s) {
  record("enclave_share", id, std::nullopt, s.counter, s.commitment.hex(),
         "signer=" + std::to_string(proposal.signer));
}

void World::on_error(ReplicaId id, std::string_view op, EnclaveError e) {
  record("enclave_error", id, std::nullopt, std::nullopt, "",
         "op=" + std::string(op) + " error=" + std::string(to_string(e)));
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  World w(cfg);
  return w.run();
}

}  // namespace tbft::sim

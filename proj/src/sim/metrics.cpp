#include "tbft/sim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace tbft::sim {

namespace {

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }

LatencyStats summarize(const std::map<std::pair<NodeId, std::uint64_t>, std::uint64_t>& lat) {
  LatencyStats s;
  if (lat.empty()) return s;
  std::vector<std::uint64_t> v;
  v.reserve(lat.size());
  for (const auto& [k, t] : lat) v.push_back(t);
  std::sort(v.begin(), v.end());
  s.count = v.size();
  s.mean = static_cast<double>(std::accumulate(v.begin(), v.end(), std::uint64_t{0})) / static_cast<double>(v.size());
  // Nearest-rank percentiles.
  auto rank = [&](double q) {
    auto idx = static_cast<std::size_t>(q * static_cast<double>(v.size()) + 0.999999);
    return v[std::clamp<std::size_t>(idx, 1, v.size()) - 1];
  };
  s.p50 = rank(0.50);
  s.p99 = rank(0.99);
  s.min = v.front();
  s.max = v.back();
  return s;
}

bool view_change_kind(std::string_view kind) {
  auto k = msg_kind_from_string(kind);
  return k && is_view_change_kind(*k);
}

nlohmann::ordered_json latency_json(const LatencyStats& s, std::uint64_t delta) {
  const double d = delta == 0 ? 1.0 : static_cast<double>(delta);
  return {{"count", s.count},
          {"mean_ticks", s.mean},
          {"p50_ticks", s.p50},
          {"p99_ticks", s.p99},
          {"min_ticks", s.min},
          {"max_ticks", s.max},
          {"mean_delta", s.mean / d},
          {"p99_delta", static_cast<double>(s.p99) / d}};
}

LatencyStats latency_from_json(const nlohmann::json& j) {
  LatencyStats s;
  s.count = j.at("count").get<std::size_t>();
  s.mean = j.at("mean_ticks").get<double>();
  s.p50 = j.at("p50_ticks").get<std::uint64_t>();
  s.p99 = j.at("p99_ticks").get<std::uint64_t>();
  s.min = j.at("min_ticks").get<std::uint64_t>();
  s.max = j.at("max_ticks").get<std::uint64_t>();
  return s;
}

}  // namespace

double Metrics::messages_per_commit() const { return ratio(static_cast<double>(normal_messages), static_cast<double>(commits)); }
double Metrics::messages_per_view_change() const {
  return ratio(static_cast<double>(view_change_messages), static_cast<double>(view_changes));
}
double Metrics::client_messages_per_request() const {
  return ratio(static_cast<double>(client_messages), static_cast<double>(submitted));
}
double Metrics::commits_per_round() const {
  return ratio(static_cast<double>(commits), static_cast<double>(voting_rounds));
}

MetricsCollector::MetricsCollector(std::size_t n, std::uint64_t delta, std::string mode, std::set<ReplicaId> corrupt)
    : n_(n), delta_(delta), mode_(std::move(mode)), corrupt_(std::move(corrupt)) {}

void MetricsCollector::sent(NodeId src, NodeId dst, std::string_view kind) {
  ++m_.per_kind[std::string(kind)];
  if (src >= n_ || dst >= n_) {
    ++m_.client_messages;
    return;
  }
  ++m_.replica_messages;
  if (view_change_kind(kind)) {
    ++m_.view_change_messages;
  } else {
    ++m_.normal_messages;
  }
}

void MetricsCollector::submitted(NodeId client, std::uint64_t request_id) { submits_.insert({client, request_id}); }

void MetricsCollector::proof(NodeId client, std::uint64_t request_id, bool execution, bool verified,
                             std::uint64_t latency) {
  if (!verified) return;
  auto& into = execution ? exec_lat_ : commit_lat_;
  into.emplace(std::make_pair(client, request_id), latency);
}

void MetricsCollector::executed(ReplicaId replica, CounterValue counter, std::size_t ops) {
  if (honest(replica) && ops > 0) committed_.insert(counter);
}

void MetricsCollector::view_entered(ReplicaId replica, ViewNumber view) {
  if (honest(replica) && view > 0) views_.insert(view);
}

void MetricsCollector::qc(ReplicaId replica, CounterValue counter, std::string_view phase) {
  if (!honest(replica) || (phase != "commit" && phase != "execute")) return;
  rounds_.insert(counter);
}

Metrics MetricsCollector::finish(std::uint64_t end_tick) const {
  Metrics m = m_;
  m.n = n_;
  m.delta = delta_;
  m.mode = mode_;
  m.end_tick = end_tick;
  m.commits = committed_.size();
  m.requests_committed = commit_lat_.size();
  m.requests_executed = exec_lat_.size();
  m.commit_latency = summarize(commit_lat_);
  m.exec_latency = summarize(exec_lat_);
  m.submitted = submits_.size();
  m.view_changes = views_.size();
  m.voting_rounds = rounds_.size();
  return m;
}

Metrics compute_metrics(const Trace& trace) {
  const auto h = parse_header(trace);
  MetricsCollector c(h.n, h.delta, h.mode, h.corrupt);
  std::uint64_t end = 0;
  for (const auto& r : trace) {
    end = std::max(end, r.tick);
    if (r.kind == "send" && r.src && r.dst) {
      c.sent(*r.src, *r.dst, note_field(r.note, "kind").value_or(""));
    } else if (r.kind == "submit" && r.src) {
      c.submitted(*r.src, note_u64(r.note, "req").value_or(0));
    } else if (r.kind == "client_proof" && r.src) {
      c.proof(*r.src, note_u64(r.note, "req").value_or(0), note_field(r.note, "proof") == std::string("execution"),
              note_field(r.note, "verified") == std::string("1"), note_u64(r.note, "latency").value_or(0));
    } else if (r.kind == "execute" && r.src && r.counter) {
      c.executed(*r.src, *r.counter, note_u64(r.note, "ops").value_or(0));
    } else if (r.kind == "view" && r.src) {
      c.view_entered(*r.src, note_u64(r.note, "view").value_or(0));
    } else if (r.kind == "qc" && r.src && r.counter) {
      c.qc(*r.src, *r.counter, note_field(r.note, "phase").value_or(""));
    } else if (r.kind == "liveness") {
      end = note_u64(r.note, "end").value_or(end);
    }
  }
  return c.finish(end);
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["delta"] = m.delta;
  j["mode"] = m.mode;
  j["end_tick"] = m.end_tick;
  j["commits"] = m.commits;
  j["requests_submitted"] = m.submitted;
  j["requests_committed"] = m.requests_committed;
  j["requests_executed"] = m.requests_executed;
  j["commit_latency"] = latency_json(m.commit_latency, m.delta);
  j["exec_latency"] = latency_json(m.exec_latency, m.delta);
  j["replica_messages"] = m.replica_messages;
  j["normal_messages"] = m.normal_messages;
  j["view_change_messages"] = m.view_change_messages;
  j["client_messages"] = m.client_messages;
  j["view_changes"] = m.view_changes;
  j["voting_rounds"] = m.voting_rounds;
  j["messages_per_commit"] = m.messages_per_commit();
  j["messages_per_view_change"] = m.messages_per_view_change();
  j["client_messages_per_request"] = m.client_messages_per_request();
  j["commits_per_round"] = m.commits_per_round();
  j["per_kind"] = m.per_kind;
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.n = j.at("n").get<std::size_t>();
  m.delta = j.at("delta").get<std::uint64_t>();
  m.mode = j.at("mode").get<std::string>();
  m.end_tick = j.at("end_tick").get<std::uint64_t>();
  m.commits = j.at("commits").get<std::size_t>();
  m.submitted = j.at("requests_submitted").get<std::size_t>();
  m.requests_committed = j.at("requests_committed").get<std::size_t>();
  m.requests_executed = j.at("requests_executed").get<std::size_t>();
  m.commit_latency = latency_from_json(j.at("commit_latency"));
  m.exec_latency = latency_from_json(j.at("exec_latency"));
  m.replica_messages = j.at("replica_messages").get<std::uint64_t>();
  m.normal_messages = j.at("normal_messages").get<std::uint64_t>();
  m.view_change_messages = j.at("view_change_messages").get<std::uint64_t>();
  m.client_messages = j.at("client_messages").get<std::uint64_t>();
  m.view_changes = j.at("view_changes").get<std::size_t>();
  m.voting_rounds = j.at("voting_rounds").get<std::size_t>();
  m.per_kind = j.at("per_kind").get<std::map<std::string, std::uint64_t>>();
  return m;
}

}  // namespace tbft::sim

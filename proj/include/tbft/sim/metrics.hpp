#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tbft/protocol/messages.hpp"
#include "tbft/sim/trace.hpp"

namespace tbft::sim {

struct LatencyStats {
  std::size_t count = 0;
  double mean = 0;
  std::uint64_t p50 = 0;
  std::uint64_t p99 = 0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

struct Metrics {
  std::size_t n = 0;
  std::uint64_t delta = 0;
  std::string mode;
  std::uint64_t end_tick = 0;

  std::size_t commits = 0;  // distinct non-empty entries executed by some honest replica
  std::size_t requests_committed = 0;  // requests with a verified commitment proof
  std::size_t requests_executed = 0;   // requests with a verified execution proof
  LatencyStats commit_latency;  // ticks, submit to first verified commitment proof
  LatencyStats exec_latency;

  std::uint64_t replica_messages = 0;  // sends between replicas
  std::uint64_t normal_messages = 0;   // of which normal-case kinds
  std::uint64_t view_change_messages = 0;
  std::uint64_t client_messages = 0;   // sends with a client at either end
  std::size_t submitted = 0;
  std::size_t view_changes = 0;  // views above 0 entered by an honest replica
  std::size_t voting_rounds = 0; // normal-case QCs formed
  std::map<std::string, std::uint64_t> per_kind;

  double messages_per_commit() const;
  double messages_per_view_change() const;
  double client_messages_per_request() const;
  double commits_per_round() const;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Aggregation shared by the live simulator and the trace reader, so both paths
// apply the same definitions.
class MetricsCollector {
 public:
  MetricsCollector(std::size_t n, std::uint64_t delta, std::string mode, std::set<ReplicaId> corrupt);

  void sent(NodeId src, NodeId dst, std::string_view kind);
  void submitted(NodeId client, std::uint64_t request_id);
  void proof(NodeId client, std::uint64_t request_id, bool execution, bool verified, std::uint64_t latency);
  void executed(ReplicaId replica, CounterValue counter, std::size_t ops);
  void view_entered(ReplicaId replica, ViewNumber view);
  void qc(ReplicaId replica, CounterValue counter, std::string_view phase);

  Metrics finish(std::uint64_t end_tick) const;

 private:
  bool honest(ReplicaId id) const { return id < n_ && corrupt_.count(id) == 0; }

  std::size_t n_;
  std::uint64_t delta_;
  std::string mode_;
  std::set<ReplicaId> corrupt_;
  Metrics m_;
  std::map<std::pair<NodeId, std::uint64_t>, std::uint64_t> commit_lat_;
  std::map<std::pair<NodeId, std::uint64_t>, std::uint64_t> exec_lat_;
  std::set<std::pair<NodeId, std::uint64_t>> submits_;
  std::set<CounterValue> committed_;
  std::set<ViewNumber> views_;
  std::set<CounterValue> rounds_;
};

// Recomputes the run's metrics from its trace alone.
Metrics compute_metrics(const Trace& trace);

nlohmann::ordered_json metrics_to_json(const Metrics& m);
// Reads back the raw fields written by metrics_to_json.
Metrics metrics_from_json(const nlohmann::json& j);

}  // namespace tbft::sim

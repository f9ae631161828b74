#pragma once

#include <memory>
#include <queue>
#include <set>
#include <vector>

#include "tbft/client/client.hpp"
#include "tbft/sim/byzantine.hpp"
#include "tbft/sim/metrics.hpp"
#include "tbft/sim/network.hpp"
#include "tbft/sim/scenario.hpp"
#include "tbft/sim/trace.hpp"

namespace tbft::sim {

struct RunResult {
  Trace trace;
  bool completed = false;              // every request got its proof
  std::uint64_t end_tick = 0;
  std::optional<std::uint64_t> completion_tick;
  std::size_t requests = 0;
  std::size_t proven = 0;
  std::set<ReplicaId> corrupt;
  Metrics metrics;  // collected live, independently of the trace
};

// One isolated simulation: replicas, clients, network and adversary.
class World final : public ReplicaEnv, public ClientEnv, public EnclaveObserver {
 public:
  explicit World(ScenarioConfig cfg);
  ~World() override;

  RunResult run();

  // ReplicaEnv / ClientEnv
  std::uint64_t now() const override { return now_; }
  void send(NodeId from, NodeId to, const Message& msg) override;
  void set_timer(NodeId node, std::uint64_t delay, std::uint64_t token) override;

  void on_execute(ReplicaId, const ExecRecord&, std::size_t position) override;
  void on_view(ReplicaId, ViewNumber, ReplicaId leader) override;
  void on_qc(ReplicaId, const QuorumCert&, std::string_view phase) override;
  void on_view_change_request(ReplicaId, ViewNumber target, std::string_view reason) override;
  void on_log_accepted(ReplicaId, const MessageLogProof&) override;
  void on_note(ReplicaId, std::string_view) override;

  void on_submit(NodeId client, std::uint64_t request_id) override;
  void on_proof(NodeId client, const ReplyMsg&, bool verified, std::uint64_t latency) override;
  void on_resend(NodeId client, std::uint64_t request_id, std::uint64_t next_timeout) override;

  // EnclaveObserver
  void on_signed(ReplicaId, const SignedCounter&) override;
  void on_log_proof(ReplicaId, const MessageLogProof&) override;
  void on_share_released(ReplicaId, const SignedCounter&, const ReleasedShare&) override;
  void on_error(ReplicaId, std::string_view op, EnclaveError) override;

  const std::set<ReplicaId>& corrupt() const { return corrupt_; }
  const Replica& replica(ReplicaId id) const { return *replicas_.at(id); }
  ReplicaId current_leader() const { return leader_; }

 private:
  enum class EventType { Deliver, Timer, Host, Start };
  struct Event {
    std::uint64_t tick = 0;
    std::uint64_t seq = 0;
    EventType type = EventType::Deliver;
    NodeId src = 0;
    NodeId dst = 0;
    std::uint64_t token = 0;  // timer token, rule index or message id
    std::shared_ptr<const Bytes> bytes;
    std::string tag;
    bool operator>(const Event& o) const { return tick != o.tick ? tick > o.tick : seq > o.seq; }
  };

  void push(Event e);
  void record(std::string kind, std::optional<std::uint32_t> src, std::optional<std::uint32_t> dst,
              std::optional<CounterValue> counter, std::string digest, std::string note,
              std::optional<std::uint64_t> tick = {});
  void deliver(const Event& e);
  void host_action(const AdversaryRule& rule, std::size_t index);
  void resolve_corrupt(crypto::Prg& rng);
  Operation make_op(NodeId client, std::size_t i);
  bool all_done() const;

  ScenarioConfig cfg_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_msg_id_ = 0;
  Trace trace_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::shared_ptr<const Pki> pki_;
  std::set<ReplicaId> corrupt_;
  std::unique_ptr<Network> network_;
  std::unique_ptr<MetricsCollector> metrics_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  std::vector<std::unique_ptr<Client>> clients_;
  std::vector<ViewNumber> views_;
  ReplicaId leader_ = 0;
  std::size_t proven_ = 0;
  bool in_handler_ = false;
};

RunResult run_scenario(const ScenarioConfig& cfg);

}  // namespace tbft::sim

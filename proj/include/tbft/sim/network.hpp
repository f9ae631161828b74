#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tbft/crypto/prg.hpp"
#include "tbft/sim/scenario.hpp"

namespace tbft::sim {

struct Delivery {
  std::uint64_t at = 0;
  Bytes bytes;
  std::string tag;  // empty for an ordinary delivery
};

struct RouteOutcome {
  std::vector<Delivery> deliveries;
  std::vector<std::string> actions;  // adversary actions applied, for the trace
  bool dropped = false;
};

// Delivery schedule for every message: the baseline delay law plus the adversary's
// message rules. Messages between two correct nodes sent at or after GST always get the
// baseline delay in [1, delta].
class Network {
 public:
  Network(const ScenarioConfig& cfg, std::set<ReplicaId> corrupt, crypto::Prg rng);

  RouteOutcome route(std::uint64_t sent, NodeId src, NodeId dst, MsgKind kind, const Bytes& bytes,
                     ReplicaId leader);

  bool is_corrupt(NodeId id) const { return corrupt_.count(id) != 0; }
  bool honest_pair(NodeId a, NodeId b) const { return !is_corrupt(a) && !is_corrupt(b); }
  std::uint64_t base_delay();

 private:
  bool matches(const NodeSelector& s, NodeId node, ReplicaId leader) const;
  bool rule_matches(const AdversaryRule& r, std::uint64_t sent, NodeId src, NodeId dst, MsgKind kind,
                    ReplicaId leader);
  int group_of(const AdversaryRule& r, NodeId node, ReplicaId leader) const;

  const ScenarioConfig& cfg_;
  std::set<ReplicaId> corrupt_;
  crypto::Prg rng_;
  // In a partition, "leader" means the leader when the partition began.
  std::map<std::size_t, ReplicaId> partition_leader_;
};

}  // namespace tbft::sim

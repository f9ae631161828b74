#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tbft/crypto/signature.hpp"
#include "tbft/protocol/messages.hpp"
#include "tbft/protocol/replica.hpp"

namespace tbft::sim {

inline constexpr int kScenarioSchema = 1;
inline constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

// Invalid scenario: `where` is a JSON path such as "adversary.rules[1].action".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// Who a rule refers to. Leader means the current leader at match time.
struct NodeSelector {
  enum class Kind { Any, Id, Leader, Corrupt, Honest, Replicas, Clients };
  Kind kind = Kind::Any;
  std::uint32_t id = 0;
  friend bool operator==(const NodeSelector&, const NodeSelector&) = default;
};

enum class ActionKind {
  Drop,
  Delay,
  Duplicate,
  Reorder,
  Replay,
  Modify,
  Partition,
  TerminateEnclave,
  ScheduleEnclave,
  EquivocateAttempt,
  DoubleVoteAttempt,
  FakeQc,
  LogRollbackAttempt,
  DosLeader,
};

std::string_view to_string(ActionKind a);
bool is_message_action(ActionKind a);
bool is_host_action(ActionKind a);  // acts on corrupt replicas or their enclaves

struct AdversaryRule {
  ActionKind action = ActionKind::Drop;
  std::vector<MsgKind> kinds;  // empty matches every kind
  NodeSelector src;
  NodeSelector dst;
  std::uint64_t from = 0;
  std::uint64_t to = kNever;
  double probability = 1.0;

  std::uint64_t ticks = 0;      // delay: extra ticks (lower bound when max_ticks set)
  std::uint64_t max_ticks = 0;  // delay: upper bound of a random extra delay
  std::uint32_t copies = 1;     // duplicate
  std::uint64_t window = 0;     // reorder
  std::uint64_t lag = 0;        // replay
  std::vector<std::vector<NodeSelector>> groups;  // partition
  NodeSelector target{NodeSelector::Kind::Corrupt, 0};
  std::uint64_t at = 0;             // terminate / schedule
  std::vector<std::string> calls;   // schedule
};

struct CorruptSpec {
  std::vector<ReplicaId> ids;  // explicit set, or
  std::string select;          // "leader" | "followers"
  std::optional<std::size_t> count;  // unset means f
};

struct ClientsConfig {
  std::size_t count = 1;
  std::size_t requests = 10;
  std::size_t payload_bytes = 16;
  std::size_t window = 1;
  Subscription subscription = Subscription::Commitment;
  std::uint64_t timeout = 0;  // 0 means 8 delta
};

struct ScenarioConfig {
  int schema = kScenarioSchema;
  std::string name;
  std::string expect = "liveness";  // or "safety"
  std::size_t n = 3;
  std::size_t f = 1;
  std::uint64_t delta = 10;
  std::optional<std::uint64_t> gst = 0;  // unset: never stabilizes
  std::uint64_t max_ticks = 10000;
  std::uint64_t drain_ticks = 0;  // keep running this long after the last proof
  Mode mode = Mode::Basic;
  std::size_t batch_max = 64;
  std::string delay_model = "uniform";  // or "fixed"
  ClientsConfig clients;
  CorruptSpec corrupt;
  std::vector<AdversaryRule> rules;
  std::uint64_t seed = 1;
  crypto::CryptoMode crypto = crypto::CryptoMode::Sim;

  std::uint64_t gst_or_never() const { return gst.value_or(kNever); }
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg);

// Returns the config with n (and f) replaced, after re-validation.
ScenarioConfig with_n(ScenarioConfig cfg, std::size_t n);

}  // namespace tbft::sim

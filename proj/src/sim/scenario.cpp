#include "tbft/sim/scenario.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace tbft::sim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 14> kActionNames = {
    "drop",           "delay",       "duplicate",           "reorder",   "replay",
    "modify",         "partition",   "terminate_enclave",   "schedule_enclave",
    "equivocate_attempt", "double_vote_attempt", "fake_qc", "log_rollback_attempt", "dos_leader"};

const std::set<std::string> kEnclaveCalls = {"create_counter", "generate_secret", "get_highest_message",
                                             "update_view", "replay_vote"};

// Reads fields of one JSON object and rejects the ones nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ScenarioError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }
  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ScenarioError(at(key), "required field missing");
    return as<T>(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ScenarioError(at(it.key()), "unknown field");
    }
  }

 private:
  template <typename T>
  T as(const std::string& key) {
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t> ||
                    std::is_same_v<T, std::uint32_t>) {
        if (!v.is_number_unsigned()) throw ScenarioError(at(key), "expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ScenarioError(at(key), "expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ScenarioError(at(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ScenarioError(at(key), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ScenarioError(at(key), e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

NodeSelector parse_selector(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return {NodeSelector::Kind::Id, v.get<std::uint32_t>()};
  if (!v.is_string()) throw ScenarioError(where, "expected a node id or selector name");
  const auto s = v.get<std::string>();
  if (s == "any") return {NodeSelector::Kind::Any, 0};
  if (s == "leader") return {NodeSelector::Kind::Leader, 0};
  if (s == "corrupt") return {NodeSelector::Kind::Corrupt, 0};
  if (s == "honest") return {NodeSelector::Kind::Honest, 0};
  if (s == "replicas") return {NodeSelector::Kind::Replicas, 0};
  if (s == "clients") return {NodeSelector::Kind::Clients, 0};
  throw ScenarioError(where, "unknown selector '" + s + "'");
}

ordered_json selector_to_json(const NodeSelector& s) {
  switch (s.kind) {
    case NodeSelector::Kind::Any: return "any";
    case NodeSelector::Kind::Id: return s.id;
    case NodeSelector::Kind::Leader: return "leader";
    case NodeSelector::Kind::Corrupt: return "corrupt";
    case NodeSelector::Kind::Honest: return "honest";
    case NodeSelector::Kind::Replicas: return "replicas";
    case NodeSelector::Kind::Clients: return "clients";
  }
  return "any";
}

std::optional<std::uint64_t> parse_tick_or_never(const json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string() && v.get<std::string>() == "never") return std::nullopt;
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  throw ScenarioError(where, "expected a tick or \"never\"");
}

AdversaryRule parse_rule(const json& j, const std::string& path) {
  Fields in(j, path);
  AdversaryRule r;
  const auto name = in.require<std::string>("action");
  auto it = std::find(kActionNames.begin(), kActionNames.end(), name);
  if (it == kActionNames.end()) throw ScenarioError(in.at("action"), "unknown action '" + name + "'");
  r.action = static_cast<ActionKind>(it - kActionNames.begin());

  if (in.has("match")) {
    Fields m(in.raw("match"), in.at("match"));
    if (m.has("kinds")) {
      const auto& ks = m.raw("kinds");
      if (!ks.is_array()) throw ScenarioError(m.at("kinds"), "expected an array");
      for (const auto& k : ks) {
        auto kind = k.is_string() ? msg_kind_from_string(k.get<std::string>()) : std::nullopt;
        if (!kind) throw ScenarioError(m.at("kinds"), "unknown message kind " + k.dump());
        r.kinds.push_back(*kind);
      }
    }
    if (m.has("src")) r.src = parse_selector(m.raw("src"), m.at("src"));
    if (m.has("dst")) r.dst = parse_selector(m.raw("dst"), m.at("dst"));
    r.from = m.get<std::uint64_t>("from", 0);
    if (m.has("to")) r.to = parse_tick_or_never(m.raw("to"), m.at("to")).value_or(kNever);
    r.probability = m.get<double>("probability", 1.0);
    if (r.probability < 0 || r.probability > 1) throw ScenarioError(m.at("probability"), "must lie in [0,1]");
    m.finish();
  }
  if (!is_message_action(r.action) && r.action != ActionKind::Partition && r.action != ActionKind::DosLeader &&
      !r.kinds.empty()) {
    throw ScenarioError(in.at("match"), "message kinds do not apply to this action");
  }

  switch (r.action) {
    case ActionKind::Delay:
      r.ticks = in.require<std::uint64_t>("ticks");
      r.max_ticks = in.get<std::uint64_t>("max_ticks", r.ticks);
      if (r.max_ticks < r.ticks) throw ScenarioError(in.at("max_ticks"), "must be >= ticks");
      break;
    case ActionKind::Duplicate:
      r.copies = in.get<std::uint32_t>("copies", 1);
      if (r.copies == 0 || r.copies > 16) throw ScenarioError(in.at("copies"), "must lie in 1..16");
      break;
    case ActionKind::Reorder:
      r.window = in.require<std::uint64_t>("window");
      break;
    case ActionKind::Replay:
      r.lag = in.require<std::uint64_t>("lag");
      break;
    case ActionKind::Partition: {
      const auto& gs = in.raw("groups");
      if (!gs.is_array() || gs.size() < 2) throw ScenarioError(in.at("groups"), "expected at least two groups");
      for (std::size_t g = 0; g < gs.size(); ++g) {
        const auto where = in.at("groups") + "[" + std::to_string(g) + "]";
        if (!gs[g].is_array()) throw ScenarioError(where, "expected an array");
        std::vector<NodeSelector> group;
        for (const auto& s : gs[g]) group.push_back(parse_selector(s, where));
        r.groups.push_back(std::move(group));
      }
      break;
    }
    case ActionKind::TerminateEnclave:
    case ActionKind::ScheduleEnclave:
      r.at = in.require<std::uint64_t>("at");
      [[fallthrough]];
    case ActionKind::EquivocateAttempt:
    case ActionKind::DoubleVoteAttempt:
    case ActionKind::FakeQc:
    case ActionKind::LogRollbackAttempt:
      if (in.has("target")) r.target = parse_selector(in.raw("target"), in.at("target"));
      if (r.target.kind != NodeSelector::Kind::Corrupt && r.target.kind != NodeSelector::Kind::Id) {
        throw ScenarioError(in.at("target"), "must be \"corrupt\" or a replica id");
      }
      if (r.action == ActionKind::ScheduleEnclave) {
        const auto& cs = in.raw("calls");
        if (!cs.is_array() || cs.empty()) throw ScenarioError(in.at("calls"), "expected a non-empty array");
        for (const auto& c : cs) {
          if (!c.is_string() || kEnclaveCalls.count(c.get<std::string>()) == 0) {
            throw ScenarioError(in.at("calls"), "unknown enclave call " + c.dump());
          }
          r.calls.push_back(c.get<std::string>());
        }
      }
      break;
    default:
      break;
  }
  in.finish();
  return r;
}

ordered_json rule_to_json(const AdversaryRule& r) {
  ordered_json j;
  j["action"] = std::string(to_string(r.action));
  ordered_json m = ordered_json::object();
  if (!r.kinds.empty()) {
    m["kinds"] = ordered_json::array();
    for (auto k : r.kinds) m["kinds"].push_back(std::string(to_string(k)));
  }
  if (r.src.kind != NodeSelector::Kind::Any) m["src"] = selector_to_json(r.src);
  if (r.dst.kind != NodeSelector::Kind::Any) m["dst"] = selector_to_json(r.dst);
  if (r.from != 0) m["from"] = r.from;
  if (r.to != kNever) m["to"] = r.to;
  if (r.probability != 1.0) m["probability"] = r.probability;
  if (!m.empty()) j["match"] = m;
  switch (r.action) {
    case ActionKind::Delay:
      j["ticks"] = r.ticks;
      j["max_ticks"] = r.max_ticks;
      break;
    case ActionKind::Duplicate: j["copies"] = r.copies; break;
    case ActionKind::Reorder: j["window"] = r.window; break;
    case ActionKind::Replay: j["lag"] = r.lag; break;
    case ActionKind::Partition: {
      j["groups"] = ordered_json::array();
      for (const auto& g : r.groups) {
        ordered_json arr = ordered_json::array();
        for (const auto& s : g) arr.push_back(selector_to_json(s));
        j["groups"].push_back(arr);
      }
      break;
    }
    case ActionKind::TerminateEnclave:
    case ActionKind::ScheduleEnclave:
      j["at"] = r.at;
      [[fallthrough]];
    case ActionKind::EquivocateAttempt:
    case ActionKind::DoubleVoteAttempt:
    case ActionKind::FakeQc:
    case ActionKind::LogRollbackAttempt:
      j["target"] = selector_to_json(r.target);
      if (!r.calls.empty()) j["calls"] = r.calls;
      break;
    default:
      break;
  }
  return j;
}

void validate(const ScenarioConfig& c) {
  if (c.schema != kScenarioSchema) {
    throw ScenarioError("schema", "unsupported schema version " + std::to_string(c.schema));
  }
  if (c.f == 0 || c.n != 2 * c.f + 1) throw ScenarioError("n", "n must equal 2f+1 with f >= 1");
  if (c.delta < 2) throw ScenarioError("delta", "must be at least 2 ticks");
  if (c.clients.count == 0) throw ScenarioError("clients.count", "need at least one client");
  if (c.clients.window == 0) throw ScenarioError("clients.window", "must be positive");
  if (c.batch_max == 0) throw ScenarioError("batch_max", "must be positive");
  const auto corrupt = c.corrupt.ids.empty() ? (c.corrupt.select.empty() ? 0 : c.corrupt.count.value_or(c.f))
                                             : c.corrupt.ids.size();
  if (corrupt > c.f) throw ScenarioError("adversary.corrupt", "more than f corrupt replicas");
  std::set<ReplicaId> ids;
  for (auto id : c.corrupt.ids) {
    if (id >= c.n) throw ScenarioError("adversary.corrupt", "replica id out of range");
    if (!ids.insert(id).second) throw ScenarioError("adversary.corrupt", "duplicate replica id");
  }
  if (c.corrupt.select == "leader" && c.corrupt.count.value_or(1) != 1) {
    throw ScenarioError("adversary.corrupt.count", "the leader selector picks exactly one replica");
  }
  for (std::size_t i = 0; i < c.rules.size(); ++i) {
    const auto& r = c.rules[i];
    const auto where = "adversary.rules[" + std::to_string(i) + "]";
    if (is_host_action(r.action)) {
      if (corrupt == 0) throw ScenarioError(where, "host actions need a corrupt replica");
      if (r.target.kind == NodeSelector::Kind::Id && !c.corrupt.ids.empty() && ids.count(r.target.id) == 0) {
        throw ScenarioError(where + ".target", "target is not corrupt");
      }
      if (r.target.kind == NodeSelector::Kind::Id && c.corrupt.ids.empty()) {
        throw ScenarioError(where + ".target", "use \"corrupt\" with a selected corrupt set");
      }
    }
  }
}

}  // namespace

std::string_view to_string(ActionKind a) { return kActionNames[static_cast<std::size_t>(a)]; }

bool is_message_action(ActionKind a) {
  switch (a) {
    case ActionKind::Drop:
    case ActionKind::Delay:
    case ActionKind::Duplicate:
    case ActionKind::Reorder:
    case ActionKind::Replay:
    case ActionKind::Modify: return true;
    default: return false;
  }
}

bool is_host_action(ActionKind a) {
  switch (a) {
    case ActionKind::TerminateEnclave:
    case ActionKind::ScheduleEnclave:
    case ActionKind::EquivocateAttempt:
    case ActionKind::DoubleVoteAttempt:
    case ActionKind::FakeQc:
    case ActionKind::LogRollbackAttempt: return true;
    default: return false;
  }
}

ScenarioConfig scenario_from_json(const json& j) {
  Fields in(j, "");
  ScenarioConfig c;
  c.schema = in.require<int>("schema");
  if (c.schema != kScenarioSchema) {
    throw ScenarioError("schema", "unsupported schema version " + std::to_string(c.schema));
  }
  c.name = in.get<std::string>("name", "");
  c.expect = in.get<std::string>("expect", "liveness");
  if (c.expect != "liveness" && c.expect != "safety") throw ScenarioError("expect", "must be liveness or safety");
  c.n = in.require<std::size_t>("n");
  c.f = in.get<std::size_t>("f", c.n >= 1 ? (c.n - 1) / 2 : 0);
  c.delta = in.get<std::uint64_t>("delta", 10);
  if (in.has("gst")) c.gst = parse_tick_or_never(in.raw("gst"), "gst");
  c.max_ticks = in.require<std::uint64_t>("max_ticks");
  c.drain_ticks = in.get<std::uint64_t>("drain_ticks", 0);
  const auto mode = in.get<std::string>("mode", "basic");
  if (mode == "basic") {
    c.mode = Mode::Basic;
  } else if (mode == "pipelined") {
    c.mode = Mode::Pipelined;
  } else {
    throw ScenarioError("mode", "must be basic or pipelined");
  }
  c.batch_max = in.get<std::size_t>("batch_max", 64);
  c.delay_model = in.get<std::string>("delay_model", "uniform");
  if (c.delay_model != "uniform" && c.delay_model != "fixed") {
    throw ScenarioError("delay_model", "must be uniform or fixed");
  }
  if (in.has("clients")) {
    Fields cl(in.raw("clients"), "clients");
    c.clients.count = cl.get<std::size_t>("count", 1);
    c.clients.requests = cl.get<std::size_t>("requests", 10);
    c.clients.payload_bytes = cl.get<std::size_t>("payload_bytes", 16);
    c.clients.window = cl.get<std::size_t>("window", 1);
    c.clients.timeout = cl.get<std::uint64_t>("timeout", 0);
    const auto sub = cl.get<std::string>("subscription", "commitment");
    if (sub == "commitment") {
      c.clients.subscription = Subscription::Commitment;
    } else if (sub == "execution") {
      c.clients.subscription = Subscription::Execution;
    } else if (sub == "both") {
      c.clients.subscription = Subscription::Both;
    } else {
      throw ScenarioError("clients.subscription", "must be commitment, execution or both");
    }
    cl.finish();
  }
  if (in.has("adversary")) {
    Fields adv(in.raw("adversary"), "adversary");
    if (adv.has("corrupt")) {
      const auto& cj = adv.raw("corrupt");
      if (cj.is_array()) {
        for (const auto& id : cj) {
          if (!id.is_number_unsigned()) throw ScenarioError("adversary.corrupt", "expected replica ids");
          c.corrupt.ids.push_back(id.get<ReplicaId>());
        }
      } else {
        Fields cs(cj, "adversary.corrupt");
        c.corrupt.select = cs.require<std::string>("select");
        if (c.corrupt.select != "leader" && c.corrupt.select != "followers") {
          throw ScenarioError("adversary.corrupt.select", "must be leader or followers");
        }
        if (cs.has("count")) {
          const auto& cnt = cs.raw("count");
          if (cnt.is_string() && cnt.get<std::string>() == "f") {
            c.corrupt.count.reset();
          } else if (cnt.is_number_unsigned()) {
            c.corrupt.count = cnt.get<std::size_t>();
          } else {
            throw ScenarioError("adversary.corrupt.count", "expected a count or \"f\"");
          }
        } else if (c.corrupt.select == "leader") {
          c.corrupt.count = 1;
        }
        cs.finish();
      }
    }
    if (adv.has("rules")) {
      const auto& rs = adv.raw("rules");
      if (!rs.is_array()) throw ScenarioError("adversary.rules", "expected an array");
      for (std::size_t i = 0; i < rs.size(); ++i) {
        c.rules.push_back(parse_rule(rs[i], "adversary.rules[" + std::to_string(i) + "]"));
      }
    }
    adv.finish();
  }
  c.seed = in.require<std::uint64_t>("seed");
  const auto cr = in.get<std::string>("crypto", "sim");
  if (cr == "sim") {
    c.crypto = crypto::CryptoMode::Sim;
  } else if (cr == "real") {
    c.crypto = crypto::CryptoMode::Real;
  } else {
    throw ScenarioError("crypto", "must be sim or real");
  }
  in.finish();
  validate(c);
  return c;
}

ScenarioConfig parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("<json>", e.what());
  }
  return scenario_from_json(j);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

ordered_json scenario_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["schema"] = c.schema;
  if (!c.name.empty()) j["name"] = c.name;
  j["expect"] = c.expect;
  j["n"] = c.n;
  j["f"] = c.f;
  j["delta"] = c.delta;
  j["gst"] = c.gst ? ordered_json(*c.gst) : ordered_json("never");
  j["max_ticks"] = c.max_ticks;
  if (c.drain_ticks > 0) j["drain_ticks"] = c.drain_ticks;
  j["mode"] = c.mode == Mode::Basic ? "basic" : "pipelined";
  j["batch_max"] = c.batch_max;
  j["delay_model"] = c.delay_model;
  const char* sub = c.clients.subscription == Subscription::Commitment ? "commitment"
                    : c.clients.subscription == Subscription::Execution ? "execution"
                                                                        : "both";
  j["clients"] = ordered_json{{"count", c.clients.count},
                              {"requests", c.clients.requests},
                              {"payload_bytes", c.clients.payload_bytes},
                              {"window", c.clients.window},
                              {"subscription", sub},
                              {"timeout", c.clients.timeout}};
  ordered_json adv = ordered_json::object();
  if (!c.corrupt.ids.empty()) {
    adv["corrupt"] = c.corrupt.ids;
  } else if (!c.corrupt.select.empty()) {
    ordered_json cs{{"select", c.corrupt.select}};
    cs["count"] = c.corrupt.count ? ordered_json(*c.corrupt.count) : ordered_json("f");
    adv["corrupt"] = cs;
  }
  adv["rules"] = ordered_json::array();
  for (const auto& r : c.rules) adv["rules"].push_back(rule_to_json(r));
  j["adversary"] = adv;
  j["seed"] = c.seed;
  j["crypto"] = c.crypto == crypto::CryptoMode::Sim ? "sim" : "real";
  return j;
}

ScenarioConfig with_n(ScenarioConfig cfg, std::size_t n) {
  cfg.n = n;
  cfg.f = (n - 1) / 2;
  for (auto id : cfg.corrupt.ids) {
    if (id >= n) throw ScenarioError("adversary.corrupt", "replica id out of range for n=" + std::to_string(n));
  }
  validate(cfg);
  return cfg;
}

}  // namespace tbft::sim

#include "tbft/sim/network.hpp"

namespace tbft::sim {

Network::Network(const ScenarioConfig& cfg, std::set<ReplicaId> corrupt, crypto::Prg rng)
    : cfg_(cfg), corrupt_(std::move(corrupt)), rng_(std::move(rng)) {}

std::uint64_t Network::base_delay() {
  if (cfg_.delay_model == "fixed") return cfg_.delta;
  return 1 + rng_.uniform(cfg_.delta);
}

bool Network::matches(const NodeSelector& s, NodeId node, ReplicaId leader) const {
  using K = NodeSelector::Kind;
  switch (s.kind) {
    case K::Any: return true;
    case K::Id: return node == s.id;
    case K::Leader: return node == leader;
    case K::Corrupt: return is_corrupt(node);
    case K::Honest: return node < cfg_.n && !is_corrupt(node);
    case K::Replicas: return node < cfg_.n;
    case K::Clients: return node >= cfg_.n;
  }
  return false;
}

int Network::group_of(const AdversaryRule& r, NodeId node, ReplicaId leader) const {
  // The first group that claims a node wins, so "leader" can be carved out of "honest".
  for (std::size_t g = 0; g < r.groups.size(); ++g) {
    for (const auto& s : r.groups[g]) {
      if (matches(s, node, leader)) return static_cast<int>(g);
    }
  }
  return -1;
}

bool Network::rule_matches(const AdversaryRule& r, std::uint64_t sent, NodeId src, NodeId dst, MsgKind kind,
                           ReplicaId leader) {
  if (sent < r.from || sent > r.to) return false;
  if (!r.kinds.empty() && std::find(r.kinds.begin(), r.kinds.end(), kind) == r.kinds.end()) return false;
  if (!matches(r.src, src, leader) || !matches(r.dst, dst, leader)) return false;
  if (r.probability < 1.0 && !rng_.chance(r.probability)) return false;
  return true;
}

RouteOutcome Network::route(std::uint64_t sent, NodeId src, NodeId dst, MsgKind kind, const Bytes& bytes,
                            ReplicaId leader) {
  RouteOutcome out;
  const auto base = base_delay();
  if (sent >= cfg_.gst_or_never() && honest_pair(src, dst)) {
    out.deliveries.push_back({sent + base, bytes, {}});
    return out;
  }

  std::uint64_t extra = 0;
  Bytes payload = bytes;
  std::string tag;
  std::vector<Delivery> copies;
  for (std::size_t i = 0; i < cfg_.rules.size(); ++i) {
    const auto& r = cfg_.rules[i];
    const auto label = std::string(to_string(r.action)) + " rule=" + std::to_string(i);
    if (r.action == ActionKind::Partition) {
      if (sent < r.from || sent > r.to) continue;
      const auto pinned = partition_leader_.emplace(i, leader).first->second;
      const int a = group_of(r, src, pinned);
      const int b = group_of(r, dst, pinned);
      if (a >= 0 && b >= 0 && a != b) {
        out.actions.push_back(label);
        out.dropped = true;
        return out;
      }
      continue;
    }
    if (r.action == ActionKind::DosLeader) {
      if (sent < r.from || sent > r.to || (src != leader && dst != leader)) continue;
      out.actions.push_back(label);
      out.dropped = true;
      return out;
    }
    if (!is_message_action(r.action) || !rule_matches(r, sent, src, dst, kind, leader)) continue;
    out.actions.push_back(label);
    switch (r.action) {
      case ActionKind::Drop:
        out.dropped = true;
        return out;
      case ActionKind::Delay:
        extra += r.ticks + (r.max_ticks > r.ticks ? rng_.uniform(r.max_ticks - r.ticks + 1) : 0);
        break;
      case ActionKind::Reorder:
        extra += rng_.uniform(r.window + 1);
        break;
      case ActionKind::Duplicate:
        for (std::uint32_t k = 0; k < r.copies; ++k) copies.push_back({sent + base_delay(), {}, "duplicate"});
        break;
      case ActionKind::Replay:
        copies.push_back({sent + base + r.lag, {}, "replay"});
        break;
      case ActionKind::Modify:
        if (!payload.empty()) {
          const auto pos = rng_.uniform(payload.size());
          payload[pos] ^= static_cast<std::uint8_t>(1u << rng_.uniform(8));
          tag = "modified";
        }
        break;
      default:
        break;
    }
  }
  out.deliveries.push_back({sent + base + extra, payload, tag});
  for (auto& c : copies) {
    c.bytes = payload;
    out.deliveries.push_back(std::move(c));
  }
  return out;
}

}  // namespace tbft::sim

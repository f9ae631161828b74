#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "tbft/client/client.hpp"
#include "tbft/protocol/replica.hpp"

namespace tbft::test {

// Minimal deterministic network for driving real replicas and a client.
// Every message takes `delay` ticks and goes through the wire codec.
class Bench : public ReplicaEnv, public ClientEnv {
 public:
  struct Sent {
    std::uint64_t tick;
    NodeId src;
    NodeId dst;
    Message msg;
  };
  // Return false to drop. May rewrite the message or add extra delay.
  using Filter = std::function<bool(NodeId src, NodeId dst, Message& msg, std::uint64_t& delay)>;

  // Builds replica i; lets a test swap in a faulty subclass.
  using Factory = std::function<std::unique_ptr<Replica>(ReplicaConfig, std::unique_ptr<Enclave>,
                                                         std::shared_ptr<const Pki>, ReplicaEnv&)>;

  Bench(std::size_t n, Mode mode = Mode::Basic, std::uint64_t seed = 1, std::uint64_t delta = 10,
        Factory make = {}, std::size_t client_window = 1)
      : n_(n) {
    auto rng = crypto::Prg::from_seed(seed, "bench");
    auto dep = trusted_setup(n, (n - 1) / 2, crypto::CryptoMode::Sim, rng);
    pki_ = dep.pki;
    ReplicaConfig rc;
    rc.n = n;
    rc.f = (n - 1) / 2;
    rc.mode = mode;
    rc.delta = delta;
    rc.view_change_timeout = 16 * delta;
    for (auto& s : dep.secrets) {
      auto enclave = std::make_unique<Enclave>(std::move(s), pki_);
      if (make) {
        replicas.push_back(make(rc, std::move(enclave), pki_, *this));
      } else {
        replicas.push_back(std::make_unique<Replica>(rc, std::move(enclave), pki_, *this));
      }
    }
    ClientConfig cc;
    cc.n = n;
    cc.timeout = 8 * delta;
    cc.max_timeout = 64 * delta;
    cc.window = client_window;
    client = std::make_unique<Client>(static_cast<NodeId>(n), cc, pki_, *this);
  }

  std::uint64_t now() const override { return now_; }
  const Pki& pki() const { return *pki_; }
  ReplicaId leader() const { return replicas[0]->leader(); }
  Replica& at(ReplicaId i) { return *replicas[i]; }

  void send(NodeId from, NodeId to, const Message& m) override {
    Message msg = decode(encode(m));
    std::uint64_t delay = 1;
    if (filter && !filter(from, to, msg, delay)) return;
    sent.push_back({now_, from, to, msg});
    push(now_ + delay, from, to, std::move(msg));
  }
  void set_timer(NodeId node, std::uint64_t delay, std::uint64_t token) override {
    Event e;
    e.at = now_ + delay;
    e.seq = seq_++;
    e.dst = node;
    e.token = token;
    queue_.push(std::move(e));
  }
  void on_view_change_request(ReplicaId id, ViewNumber, std::string_view reason) override {
    vc_requests.emplace_back(id, std::string(reason));
  }
  void on_qc(ReplicaId id, const QuorumCert& qc, std::string_view phase) override {
    qcs.push_back({id, qc, std::string(phase)});
  }
  void on_proof(NodeId, const ReplyMsg& r, bool verified, std::uint64_t latency) override {
    proofs.push_back({r, verified, latency});
  }

  // Inject a message as if `from` had sent it now.
  void inject(NodeId from, NodeId to, Message msg, std::uint64_t delay = 1) {
    push(now_ + delay, from, to, std::move(msg));
  }

  void run(std::uint64_t until) {
    while (!queue_.empty() && queue_.top().at <= until) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.at;
      if (e.msg) {
        if (e.dst < n_) {
          replicas[e.dst]->on_message(e.src, *e.msg);
        } else {
          client->on_message(e.src, *e.msg);
        }
      } else if (e.dst < n_) {
        replicas[e.dst]->on_timer(e.token);
      } else {
        client->on_timer(e.token);
      }
    }
    now_ = std::max(now_, until);
  }

  std::size_t count(MsgKind k, std::optional<NodeId> src = {}) const {
    std::size_t c = 0;
    for (const auto& s : sent) c += (s.msg.kind == k && (!src || s.src == *src)) ? 1 : 0;
    return c;
  }

  struct QcSeen {
    ReplicaId replica;
    QuorumCert qc;
    std::string phase;
  };
  struct ProofSeen {
    ReplyMsg reply;
    bool verified;
    std::uint64_t latency;
  };

  std::vector<std::unique_ptr<Replica>> replicas;
  std::unique_ptr<Client> client;
  Filter filter;
  std::vector<Sent> sent;
  std::vector<std::pair<ReplicaId, std::string>> vc_requests;
  std::vector<QcSeen> qcs;
  std::vector<ProofSeen> proofs;

 private:
  struct Event {
    std::uint64_t at = 0;
    std::uint64_t seq = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::optional<Message> msg;
    std::uint64_t token = 0;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };
  void push(std::uint64_t at, NodeId src, NodeId dst, Message msg) {
    Event e;
    e.at = at;
    e.seq = seq_++;
    e.src = src;
    e.dst = dst;
    e.msg = std::move(msg);
    queue_.push(std::move(e));
  }

  std::size_t n_;
  std::shared_ptr<const Pki> pki_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
};

inline Operation put_op(const std::string& k, const std::string& v) {
  return Operation{OpType::Put, k, Bytes(v.begin(), v.end())};
}

}  // namespace tbft::test

#include <vector>

#include "doctest.h"
#include "tbft/client/client.hpp"
#include "test_support.hpp"

using namespace tbft;
using namespace tbft::test;

namespace {

struct FakeEnv : ClientEnv {
  std::uint64_t t = 0;
  std::vector<std::pair<NodeId, Message>> sent;  // (dst, msg)
  std::vector<std::pair<std::uint64_t, std::uint64_t>> timers;  // (delay, token)
  std::vector<std::uint64_t> resend_timeouts;
  std::size_t verified = 0, rejected = 0;

  std::uint64_t now() const override { return t; }
  void send(NodeId, NodeId to, const Message& m) override { sent.emplace_back(to, m); }
  void set_timer(NodeId, std::uint64_t delay, std::uint64_t token) override { timers.emplace_back(delay, token); }
  void on_proof(NodeId, const ReplyMsg&, bool ok, std::uint64_t) override { ++(ok ? verified : rejected); }
  void on_resend(NodeId, std::uint64_t, std::uint64_t timeout) override { resend_timeouts.push_back(timeout); }
};

// A genuine proof for the leader's first proposal: commitment plus the secret rebuilt
// from f+1 released shares.
struct Genuine {
  Cluster cl{3};
  ReplyMsg reply;

  explicit Genuine(NodeId client = 3, std::uint64_t request_id = 0) {
    auto L = cl.leader();
    auto p = propose(cl.at(L), 0);
    std::vector<crypto::Share> shares;
    for (ReplicaId i = 0; i < 2; ++i) {
      auto r = cl.at(i).verify_counter(p.sc, p.env.shares[i]);
      REQUIRE(r);
      shares.push_back(r->share);
    }
    reply.client = client;
    reply.request_id = request_id;
    reply.kind = ProofKind::Commitment;
    reply.qc = QuorumCert{p.sc.counter, crypto::reconstruct(shares, 1)};
    reply.commitment = p.env.commitment;
    reply.leader = L;
  }
  std::shared_ptr<const Pki> pki() const { return cl.deployment.pki; }
};

ClientConfig config(std::size_t window = 1) {
  ClientConfig c;
  c.n = 3;
  c.timeout = 80;
  c.max_timeout = 640;
  c.window = window;
  return c;
}

}  // namespace

TEST_CASE("verify_proof accepts a genuine proof") {
  Genuine g;
  CHECK(verify_proof(g.reply, *g.pki()));
}

TEST_CASE("verify_proof rejects 10^4 random secrets") {
  Genuine g;
  auto rng = crypto::Prg::from_seed(99, "forgery");
  std::size_t accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    auto r = g.reply;
    r.qc.secret = crypto::Fp::random(rng);
    accepted += verify_proof(r, *g.pki()) ? 1 : 0;
  }
  CHECK(accepted == 0);
}

TEST_CASE("verify_proof binds to counter, purpose, signer and signature") {
  Genuine g;
  auto r = g.reply;
  r.qc.counter = CounterValue{0, 1};
  CHECK_FALSE(verify_proof(r, *g.pki()));

  r = g.reply;
  r.commitment.counter = CounterValue{0, 1};
  r.qc.counter = r.commitment.counter;
  CHECK_FALSE(verify_proof(r, *g.pki()));  // signature no longer matches

  r = g.reply;
  r.commitment.purpose = Purpose::Proposal;
  CHECK_FALSE(verify_proof(r, *g.pki()));

  r = g.reply;
  r.commitment.signer = 7;
  CHECK_FALSE(verify_proof(r, *g.pki()));

  r = g.reply;
  r.commitment.signer = (r.commitment.signer + 1) % 3;
  CHECK_FALSE(verify_proof(r, *g.pki()));

  r = g.reply;
  r.commitment.sig.bytes[0] ^= 1;
  CHECK_FALSE(verify_proof(r, *g.pki()));
}

TEST_CASE("submit sends one message to replica 0 and arms T_c") {
  Genuine g;
  FakeEnv env;
  Client c(3, config(), g.pki(), env);
  c.enqueue(Operation{OpType::Put, "a", {1}});
  REQUIRE(env.sent.size() == 1);
  CHECK(env.sent[0].first == 0);
  CHECK(env.sent[0].second.kind == MsgKind::Request);
  REQUIRE(env.timers.size() == 1);
  CHECK(env.timers[0].first == 80);
}

TEST_CASE("a verified reply completes the request and teaches the leader") {
  Genuine g;
  FakeEnv env;
  Client c(3, config(), g.pki(), env);
  c.enqueue(Operation{OpType::Put, "a", {1}});
  env.t = 44;
  c.on_message(g.reply.leader, Message{MsgKind::Reply, g.reply});
  CHECK(env.verified == 1);
  CHECK(c.completed() == 1);
  CHECK(c.idle());
  CHECK(c.known_leader() == g.reply.leader);
  // The obsolete timer does nothing: no resend.
  c.on_timer(env.timers[0].second);
  CHECK(env.sent.size() == 1);
  // Exactly one message out and one in.
  c.enqueue(Operation{OpType::Put, "b", {1}});
  CHECK(env.sent.back().first == g.reply.leader);
}

TEST_CASE("replies from non-replicas and forged replies are ignored") {
  Genuine g;
  FakeEnv env;
  Client c(3, config(), g.pki(), env);
  c.enqueue(Operation{OpType::Put, "a", {1}});
  c.on_message(3, Message{MsgKind::Reply, g.reply});
  CHECK(c.completed() == 0);
  auto forged = g.reply;
  forged.qc.secret = forged.qc.secret + crypto::Fp(1);
  c.on_message(0, Message{MsgKind::Reply, forged});
  CHECK(env.rejected == 1);
  CHECK(c.completed() == 0);
}

TEST_CASE("timeouts broadcast to all replicas and double up to the cap") {
  Genuine g;
  FakeEnv env;
  Client c(3, config(), g.pki(), env);
  c.enqueue(Operation{OpType::Put, "a", {1}});
  for (int i = 0; i < 6; ++i) {
    const auto before = env.sent.size();
    c.on_timer(env.timers.back().second);
    CHECK(env.sent.size() == before + 3);
  }
  CHECK(env.resend_timeouts == std::vector<std::uint64_t>{160, 320, 640, 640, 640, 640});
}

TEST_CASE("the window bounds outstanding requests") {
  Genuine g;
  FakeEnv env;
  Client c(3, config(2), g.pki(), env);
  for (int i = 0; i < 5; ++i) c.enqueue(Operation{OpType::Put, "k", {1}});
  CHECK(c.outstanding() == 2);
  CHECK(c.backlog() == 3);
  CHECK(env.sent.size() == 2);
  c.on_message(0, Message{MsgKind::Reply, g.reply});  // request 0
  CHECK(c.outstanding() == 2);
  CHECK(c.backlog() == 2);
}

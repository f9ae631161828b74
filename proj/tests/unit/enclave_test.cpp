#include <chrono>
#include <functional>
#include <set>

#include "doctest.h"
#include "tbft/enclave/enclave.hpp"
#include "log_search.hpp"
#include "test_support.hpp"

using namespace tbft;
using namespace tbft::test;

TEST_CASE("trusted setup enforces n = 2f + 1") {
  auto rng = crypto::Prg::from_seed(1, "s");
  CHECK_THROWS(trusted_setup(4, 1, crypto::CryptoMode::Sim, rng));
  CHECK_THROWS(trusted_setup(0, 0, crypto::CryptoMode::Sim, rng));
  CHECK_NOTHROW(trusted_setup(5, 2, crypto::CryptoMode::Sim, rng));
}

TEST_CASE("create_counter signs pre-increment value") {
  Cluster cl(3);
  auto& e = cl.at(cl.leader());
  auto sc = e.create_counter(digest_of(1));
  CHECK(sc.counter == CounterValue{0, 0});
  CHECK(e.current() == CounterValue{0, 1});
  CHECK(cl.pki().verify(sc));
  auto sc2 = e.create_counter(digest_of(1));
  CHECK(sc2.counter == CounterValue{0, 1});
}

TEST_CASE("generate_secret binds to the current counter only") {
  Cluster cl(3);
  auto& e = cl.at(cl.leader());
  auto stale = e.generate_secret({0, 5});
  REQUIRE_FALSE(stale);
  CHECK(stale.error() == EnclaveError::StaleBinding);
  auto env = e.generate_secret({0, 0});
  REQUIRE(env);
  CHECK(e.current() == CounterValue{0, 0});  // no increment
  CHECK(env->commitment.counter == CounterValue{0, 0});
  CHECK(env->commitment.purpose == Purpose::SecretCommitment);
  CHECK(env->shares.size() == 3);
  // One secret per binding.
  auto again = e.generate_secret({0, 0});
  REQUIRE_FALSE(again);
  CHECK(again.error() == EnclaveError::StaleBinding);
}

TEST_CASE("verify_counter accepts in order and releases reconstructible shares") {
  Cluster cl(3);
  auto L = cl.leader();
  auto p0 = propose(cl.at(L), 0);
  std::vector<crypto::Share> shares;
  for (ReplicaId i = 0; i < 3; ++i) {
    auto r = cl.at(i).verify_counter(p0.sc, p0.env.shares[i]);
    REQUIRE(r);
    CHECK(r->counter == CounterValue{0, 0});
    CHECK(r->commitment == p0.env.commitment.payload);
    shares.push_back(r->share);
  }
  auto s = crypto::reconstruct(std::vector<crypto::Share>{shares[0], shares[2]}, 1);
  CHECK(secret_digest(s) == p0.env.commitment.payload);
  for (auto i : cl.followers()) CHECK(cl.at(i).current() == CounterValue{0, 1});

  // Replay of the same proposal.
  auto f = cl.followers()[0];
  auto replay = cl.at(f).verify_counter(p0.sc, p0.env.shares[f]);
  REQUIRE_FALSE(replay);
  CHECK(replay.error() == EnclaveError::InvalidCounter);
  // The leader's own vote is released once.
  auto self_again = cl.at(L).verify_counter(p0.sc, p0.env.shares[L]);
  REQUIRE_FALSE(self_again);
}

TEST_CASE("verify_counter rejects skips, forgeries and tampered shares") {
  Cluster cl(3);
  auto L = cl.leader();
  auto f = cl.followers()[0];
  auto p0 = propose(cl.at(L), 0);
  auto p1 = propose(cl.at(L), 1);

  auto skip = cl.at(f).verify_counter(p1.sc, p1.env.shares[f]);
  REQUIRE_FALSE(skip);
  CHECK(skip.error() == EnclaveError::InvalidCounter);

  auto forged = p0.sc;
  forged.payload = digest_of(99);
  auto bad_sig = cl.at(f).verify_counter(forged, p0.env.shares[f]);
  REQUIRE_FALSE(bad_sig);
  CHECK(bad_sig.error() == EnclaveError::InvalidMessage);

  auto tampered = p0.env.shares[f];
  tampered.body[0] ^= 1;
  auto bad_share = cl.at(f).verify_counter(p0.sc, tampered);
  REQUIRE_FALSE(bad_share);
  CHECK(bad_share.error() == EnclaveError::InvalidMessage);

  // Share bound to (1,0) presented with the (0,0) proposal.
  auto mismatched = cl.at(f).verify_counter(p0.sc, p1.env.shares[f]);
  REQUIRE_FALSE(mismatched);
  CHECK(mismatched.error() == EnclaveError::InvalidCounter);

  // Proposal from a non-leader enclave.
  auto other = cl.followers()[1];
  auto rogue = propose(cl.at(other), 0);
  auto not_leader = cl.at(f).verify_counter(rogue.sc, rogue.env.shares[f]);
  REQUIRE_FALSE(not_leader);
  CHECK(not_leader.error() == EnclaveError::InvalidMessage);

  CHECK(cl.at(f).verify_counter(p0.sc, p0.env.shares[f]));
  CHECK(cl.at(f).verify_counter(p1.sc, p1.env.shares[f]));
}

TEST_CASE("get_highest_message locks voting and creates a hole") {
  Cluster cl(3);
  auto L = cl.leader();
  auto f = cl.followers()[0];
  auto p0 = propose(cl.at(L), 0);
  auto p1 = propose(cl.at(L), 1);
  auto p2 = propose(cl.at(L), 2);
  REQUIRE(cl.at(f).verify_counter(p0.sc, p0.env.shares[f]));
  REQUIRE(cl.at(f).verify_counter(p1.sc, p1.env.shares[f]));

  auto stale = cl.at(f).get_highest_message(p0.sc);
  REQUIRE_FALSE(stale);
  CHECK(stale.error() == EnclaveError::NotLatestVote);
  auto none = cl.at(f).get_highest_message(std::nullopt);
  REQUIRE_FALSE(none);
  CHECK(none.error() == EnclaveError::NotLatestVote);

  auto proof = cl.at(f).get_highest_message(p1.sc);
  REQUIRE(proof);
  CHECK(proof->proof_counter == CounterValue{0, 2});
  CHECK(proof_well_formed(*proof, cl.pki(), L, 0));
  CHECK(cl.at(f).last_validated() == CounterValue{0, 1});
  CHECK(cl.at(f).voting_locked());

  auto vote = cl.at(f).verify_counter(p2.sc, p2.env.shares[f]);
  REQUIRE_FALSE(vote);
  CHECK(vote.error() == EnclaveError::VotingLocked);

  auto second = cl.at(f).get_highest_message(p1.sc);
  REQUIRE(second);
  CHECK(second->proof_counter == CounterValue{0, 3});
  CHECK_FALSE(proof_well_formed(*second, cl.pki(), L, 0));
}

TEST_CASE("empty-log proof sits at counter zero") {
  Cluster cl(3);
  auto f = cl.followers()[0];
  auto proof = cl.at(f).get_highest_message(std::nullopt);
  REQUIRE(proof);
  CHECK(proof->proof_counter == CounterValue{0, 0});
  CHECK_FALSE(proof->highest.has_value());
  CHECK(proof_well_formed(*proof, cl.pki(), cl.leader(), 0));
}

namespace {

// Builds the view-change fixture from the sync example: the leader proposed P0..P4,
// replica X voted all five, replica Y voted P0 and P1 and then issued a proof.
struct ViewChangeFixture {
  Cluster cl{3, 7};
  ReplicaId L, X, Y;
  std::vector<Proposal> props;
  crypto::Digest qc_digest;

  ViewChangeFixture() {
    L = cl.leader();
    auto f = cl.followers();
    X = f[0];
    Y = f[1];
    for (int k = 0; k < 5; ++k) {
      props.push_back(propose(cl.at(L), k));
      REQUIRE(cl.at(L).verify_counter(props[k].sc, props[k].env.shares[L]));
      REQUIRE(cl.at(X).verify_counter(props[k].sc, props[k].env.shares[X]));
    }
    for (int k = 0; k < 2; ++k) REQUIRE(cl.at(Y).verify_counter(props[k].sc, props[k].env.shares[Y]));
    REQUIRE(cl.at(Y).get_highest_message(props[1].sc));
    // Everyone agrees that X leads view 1.
    qc_digest = digest_electing(cl.at(0), 1, X);
    for (auto& e : cl.enclaves) REQUIRE(e.elect_leader(1, qc_digest) == X);
  }
};

}  // namespace

TEST_CASE("merge and sync follow the anchor") {
  ViewChangeFixture fx;
  auto& cl = fx.cl;
  auto px = cl.at(fx.X).get_highest_message(fx.props[4].sc);
  auto pl = cl.at(fx.L).get_highest_message(fx.props[4].sc);
  REQUIRE(px);
  REQUIRE(pl);
  CHECK(px->proof_counter == CounterValue{0, 5});

  // Too few proofs.
  std::vector<MessageLogProof> one = {*px};
  auto short_quorum = cl.at(fx.X).merge_highest_messages(one, 1);
  REQUIRE_FALSE(short_quorum);
  CHECK(short_quorum.error() == EnclaveError::InsufficientQuorum);
  // Duplicate issuers do not count twice.
  std::vector<MessageLogProof> dup = {*px, *px};
  CHECK_FALSE(cl.at(fx.X).merge_highest_messages(dup, 1));
  // Only the elected leader can merge.
  std::vector<MessageLogProof> two = {*px, *pl};
  auto wrong = cl.at(fx.L).merge_highest_messages(two, 1);
  REQUIRE_FALSE(wrong);
  CHECK(wrong.error() == EnclaveError::NotLeader);

  auto anchor = cl.at(fx.X).merge_highest_messages(two, 1);
  REQUIRE(anchor);
  REQUIRE(anchor->highest.has_value());
  CHECK(anchor->highest->counter == CounterValue{0, 4});
  CHECK(anchor->seal.counter == CounterValue{0, 5});
  CHECK(cl.at(fx.X).current() == CounterValue{0, 6});

  // Tampered anchor leaves Y untouched.
  auto bad = *anchor;
  bad.target_view = 2;
  auto before = cl.at(fx.Y).current();
  auto rejected = cl.at(fx.Y).sync_with_highest(bad);
  REQUIRE_FALSE(rejected);
  CHECK(rejected.error() == EnclaveError::InvalidMessage);
  CHECK(cl.at(fx.Y).current() == before);

  // Y was locked with a hole at (2,0); it adopts the anchor.
  REQUIRE(cl.at(fx.Y).sync_with_highest(*anchor));
  CHECK(cl.at(fx.Y).last_validated() == CounterValue{0, 5});
  CHECK(cl.at(fx.Y).current() == CounterValue{0, 6});
  CHECK(cl.at(fx.Y).accepted_signer() == fx.X);
  CHECK_FALSE(cl.at(fx.Y).voting_locked());

  // New-view proposal at (6,0), voted once.
  auto nv = propose(cl.at(fx.X), 100);
  CHECK(nv.sc.counter == CounterValue{0, 6});
  auto vy = cl.at(fx.Y).verify_counter(nv.sc, nv.env.shares[fx.Y]);
  REQUIRE(vy);
  CHECK(cl.at(fx.X).verify_counter(nv.sc, nv.env.shares[fx.X]));
  // Old leader's proposals are no longer accepted.
  auto old = cl.at(fx.Y).verify_counter(fx.props[2].sc, fx.props[2].env.shares[fx.Y]);
  CHECK_FALSE(old);
  // A second anchor cannot be adopted after the new-view vote.
  auto again = cl.at(fx.Y).sync_with_highest(*anchor);
  REQUIRE_FALSE(again);
  CHECK(again.error() == EnclaveError::VotingLocked);

  cl.at(fx.Y).update_view();
  CHECK(cl.at(fx.Y).current() == CounterValue{1, 0});
  CHECK(cl.at(fx.Y).accepted_signer() == fx.X);
}

TEST_CASE("sync refuses to move the counter backwards") {
  Cluster cl(5, 9);
  auto L = cl.leader();
  auto f = cl.followers();
  auto X = f[0];
  std::vector<Proposal> props;
  for (int k = 0; k < 5; ++k) {
    props.push_back(propose(cl.at(L), k));
    REQUIRE(cl.at(L).verify_counter(props[k].sc, props[k].env.shares[L]));
    REQUIRE(cl.at(X).verify_counter(props[k].sc, props[k].env.shares[X]));
  }
  std::vector<MessageLogProof> proofs;
  for (int i = 1; i <= 3; ++i) {
    auto r = f[i];
    for (int k = 0; k < 2; ++k) REQUIRE(cl.at(r).verify_counter(props[k].sc, props[k].env.shares[r]));
    auto p = cl.at(r).get_highest_message(props[1].sc);
    REQUIRE(p);
    proofs.push_back(*p);
  }
  auto d = digest_electing(cl.at(0), 1, f[1]);
  for (auto& e : cl.enclaves) REQUIRE(e.elect_leader(1, d) == f[1]);
  auto anchor = cl.at(f[1]).merge_highest_messages(proofs, 1);
  REQUIRE(anchor);
  CHECK(anchor->seal.counter == CounterValue{0, 2});
  auto before = cl.at(X).current();
  auto r = cl.at(X).sync_with_highest(*anchor);
  REQUIRE_FALSE(r);
  CHECK(r.error() == EnclaveError::InvalidCounter);
  CHECK(cl.at(X).current() == before);
  CHECK(cl.at(f[2]).sync_with_highest(*anchor));
}

TEST_CASE("update_view resets counter state") {
  Cluster cl(3);
  auto& e = cl.at(0);
  e.create_counter(digest_of(0));
  e.update_view();
  e.update_view();
  CHECK(e.current() == CounterValue{2, 0});
  CHECK_FALSE(e.last_validated().has_value());
  CHECK_FALSE(e.voting_locked());
}

TEST_CASE("elect_leader agrees across enclaves and depends on the QC") {
  Cluster cl(5);
  int changed = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto d = digest_of(i);
    auto first = cl.at(0).elect_leader(1, d);
    for (auto& e : cl.enclaves) REQUIRE(e.elect_leader(1, d) == first);
    auto flipped = d;
    flipped.bytes[0] ^= 1;
    if (cl.at(0).elect_leader(1, flipped) != first) ++changed;
  }
  CHECK(changed > 100);
}

TEST_CASE("deterministic replay from the same secrets") {
  Cluster a(3, 42), b(3, 42);
  auto L = a.leader();
  REQUIRE(b.leader() == L);
  auto pa = propose(a.at(L), 5);
  auto pb = propose(b.at(L), 5);
  CHECK(pa.sc == pb.sc);
  CHECK(pa.env.commitment == pb.env.commitment);
  CHECK(pa.env.shares == pb.env.shares);
}

TEST_CASE("non-equivocation and one-vote under random call sequences") {
  Cluster cl(3, 3);
  auto rng = crypto::Prg::from_seed(17, "neq");
  std::vector<Proposal> pool;
  std::set<std::pair<ReplicaId, CounterValue>> signed_at;
  std::set<std::pair<ReplicaId, CounterValue>> released;
  for (int step = 0; step < 5000; ++step) {
    auto L = cl.leader();
    auto who = static_cast<ReplicaId>(rng.uniform(3));
    auto& e = cl.at(who);
    auto roll = rng.uniform(100);
    if (roll < 30) {
      auto env = cl.at(L).generate_secret(cl.at(L).current());
      auto sc = cl.at(L).create_counter(digest_of(rng.next64()));
      REQUIRE(signed_at.insert({L, sc.counter}).second);
      if (env) pool.push_back({sc, *env});
    } else if (roll < 33) {
      auto sc = e.create_counter(digest_of(rng.next64()));
      REQUIRE(signed_at.insert({who, sc.counter}).second);
    } else if (roll < 97) {
      if (pool.empty()) continue;
      // Mostly the freshest proposals, sometimes replays.
      auto idx = rng.uniform(4) == 0 ? rng.uniform(pool.size())
                                     : pool.size() - 1 - rng.uniform(std::min<std::size_t>(2, pool.size()));
      auto& p = pool[idx];
      auto r = e.verify_counter(p.sc, p.env.shares[who]);
      if (r) REQUIRE(released.insert({who, p.sc.counter}).second);
    } else if (roll < 99) {
      auto lv = e.last_validated();
      std::optional<SignedCounter> h;
      for (auto& p : pool)
        if (lv && p.sc.counter == *lv) h = p.sc;
      (void)e.get_highest_message(h);
    } else {
      auto d = digest_of(rng.next64());
      for (auto& x : cl.enclaves) {
        x.elect_leader(x.current().view + 1, d);
        x.update_view();
      }
      pool.clear();
    }
  }
  CHECK(signed_at.size() > 100);
  CHECK(released.size() > 100);
}

TEST_CASE("exhaustive log-proof search up to length 8") {
  auto r = search_log_proofs(8);
  MESSAGE("sequences=" << r.sequences << " valid_proofs=" << r.valid_proofs << " secs=" << r.seconds);
  CHECK(r.valid_proofs > 0);
  CHECK(r.violations == 0);
  CHECK(r.seconds < 60.0);
}

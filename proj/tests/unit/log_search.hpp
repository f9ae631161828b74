#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "test_support.hpp"

namespace tbft::test {

struct LogSearchResult {
  std::uint64_t sequences = 0;
  std::uint64_t valid_proofs = 0;
  std::uint64_t violations = 0;
  double seconds = 0;
};

// Exhaustive search over adversarial call sequences against one follower enclave in
// one view. Actions: vote on proposal k, or ask for a log proof claiming proposal k
// (or nothing) as the highest entry. The checker is independent of the enclave: it
// only knows which proposals were voted and which proofs came out, and judges a proof
// valid from its structure (counter right after the claimed highest, good signature).
// A violation is a valid proof whose log would omit a proposal voted earlier.
inline LogSearchResult search_log_proofs(int max_depth, int proposals = 3) {
  Cluster cl(3, 11);
  const auto L = cl.leader();
  const auto F = cl.followers()[0];
  std::vector<Proposal> props;
  for (int k = 0; k < proposals; ++k) props.push_back(propose(cl.at(L), static_cast<std::uint64_t>(k)));

  struct Action {
    bool vote;
    int k;  // -1: empty history
  };
  std::vector<Action> alphabet;
  for (int k = 0; k < proposals; ++k) alphabet.push_back({true, k});
  alphabet.push_back({false, -1});
  for (int k = 0; k < proposals; ++k) alphabet.push_back({false, k});

  struct Node {
    Enclave enclave;
    int max_voted = -1;
    int min_valid_highest = 1 << 30;
  };

  LogSearchResult res;
  const auto start = std::chrono::steady_clock::now();
  std::function<void(const Node&, int)> dfs = [&](const Node& node, int depth) {
    ++res.sequences;
    if (depth == max_depth) return;
    for (const auto& a : alphabet) {
      Node next = node;
      if (a.vote) {
        if (next.enclave.verify_counter(props[a.k].sc, props[a.k].env.shares[F])) {
          next.max_voted = std::max(next.max_voted, a.k);
        }
      } else {
        std::optional<SignedCounter> h;
        if (a.k >= 0) h = props[a.k].sc;
        auto proof = next.enclave.get_highest_message(h);
        if (proof) {
          const std::uint64_t expect = a.k < 0 ? 0 : static_cast<std::uint64_t>(a.k) + 1;
          if (proof->proof_counter == CounterValue{0, expect} && cl.pki().verify(*proof)) {
            ++res.valid_proofs;
            next.min_valid_highest = std::min(next.min_valid_highest, a.k);
          }
        }
      }
      if (next.max_voted > next.min_valid_highest) ++res.violations;
      dfs(next, depth + 1);
    }
  };
  dfs(Node{cl.at(F)}, 0);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace tbft::test

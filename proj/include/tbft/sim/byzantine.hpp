#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tbft/crypto/prg.hpp"
#include "tbft/protocol/replica.hpp"

namespace tbft::sim {

struct Window {
  bool enabled = false;
  std::uint64_t from = 0;
  std::uint64_t to = UINT64_MAX;
  double probability = 1.0;
};

struct Behaviors {
  Window equivocate;
  Window double_vote;
  Window fake_qc;
  Window log_rollback;
};

// A replica whose host is controlled by the adversary. Its enclave is genuine, so every
// attack has to go through the enclave interface or the network.
class ByzantineReplica : public Replica {
 public:
  ByzantineReplica(ReplicaConfig cfg, std::unique_ptr<Enclave> enclave, std::shared_ptr<const Pki> pki,
                   ReplicaEnv& env, Behaviors behaviors, crypto::Prg rng);

  void on_message(NodeId src, const Message& msg) override;
  // Runs a scripted sequence of enclave calls out of protocol order.
  void run_enclave_calls(const std::vector<std::string>& calls);

 protected:
  void send(NodeId to, const Message& msg) override;
  void broadcast_proposal(MsgKind kind, const ProposalMsg& p, const SecretEnvelope& env) override;
  void mutate_body(ProposalBody& body) override;

 private:
  bool active(const Window& w);
  void try_rollback();

  Behaviors behaviors_;
  crypto::Prg rng_;
  std::optional<ProposalMsg> last_proposal_;
  std::optional<ViewNumber> rolled_back_in_;
};

}  // namespace tbft::sim

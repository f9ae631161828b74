#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tbft/common/expected.hpp"
#include "tbft/crypto/prg.hpp"
#include "tbft/enclave/types.hpp"

namespace tbft {

enum class EnclaveError {
  InvalidMessage,
  InvalidCounter,
  VotingLocked,
  StaleBinding,
  NotLatestVote,
  InsufficientQuorum,
  NotLeader,
};

std::string_view to_string(EnclaveError e);

// Per-replica material handed out by the trusted setup.
struct EnclaveSecrets {
  ReplicaId id = 0;
  std::size_t n = 0;
  std::size_t f = 0;
  crypto::SigningKey signing_key;
  std::vector<crypto::SymmetricKey> link_keys;  // link_keys[j] shared with replica j
  std::array<std::uint8_t, 32> election_seed{};
  Bytes rng_seed;
};

// Hook for observing enclave outputs (used by the simulator's trace).
class EnclaveObserver {
 public:
  virtual ~EnclaveObserver() = default;
  virtual void on_signed(ReplicaId, const SignedCounter&) {}
  virtual void on_log_proof(ReplicaId, const MessageLogProof&) {}
  virtual void on_share_released(ReplicaId, const SignedCounter&, const ReleasedShare&) {}
  virtual void on_error(ReplicaId, std::string_view, EnclaveError) {}
};

class Enclave {
 public:
  Enclave(EnclaveSecrets secrets, std::shared_ptr<const Pki> pki);

  void set_observer(EnclaveObserver* observer) { observer_ = observer; }

  // Signs x at the current (c, v) and increments c. When the enclave is not locked
  // the output also counts as this enclave's own vote.
  SignedCounter create_counter(const crypto::Digest& x);
  // Fresh secret bound to `at`, which must equal the current (c, v). One per binding.
  Expected<SecretEnvelope, EnclaveError> generate_secret(CounterValue at);
  Expected<ReleasedShare, EnclaveError> verify_counter(const SignedCounter& proposal,
                                                       const crypto::Ciphertext& share);
  Expected<MessageLogProof, EnclaveError> get_highest_message(
      const std::optional<SignedCounter>& highest);
  Expected<HistoryAnchor, EnclaveError> merge_highest_messages(
      std::span<const MessageLogProof> proofs, ViewNumber target_view);
  Status<EnclaveError> sync_with_highest(const HistoryAnchor& anchor);
  void update_view();
  ReplicaId elect_leader(ViewNumber next_view, const crypto::Digest& last_qc);

  // Non-secret state, readable by the host.
  ReplicaId id() const { return id_; }
  std::size_t n() const { return n_; }
  std::size_t f() const { return f_; }
  CounterValue current() const { return {v_, c_}; }
  std::optional<CounterValue> last_validated() const { return lv_; }
  bool voting_locked() const { return locked(); }
  ReplicaId accepted_signer() const { return signer_; }
  ReplicaId view_leader() const { return view_leader_; }
  std::optional<ViewNumber> transition_target() const { return transition_target_; }
  bool new_view_voted() const { return nv_voted_; }
  std::optional<ReplicaId> elected(ViewNumber view) const;

 private:
  std::uint64_t expected_next() const { return lv_ ? lv_->counter + 1 : 0; }
  bool locked() const { return proof_lock_ || nv_voted_ || c_ != expected_next(); }
  SignedCounter sign(Purpose purpose, const crypto::Digest& payload, CounterValue at) const;
  template <typename T>
  Expected<T, EnclaveError> fail(std::string_view op, EnclaveError e) const;
  bool anchor_well_formed(const HistoryAnchor& anchor) const;
  void adopt(const HistoryAnchor& anchor);

  ReplicaId id_;
  std::size_t n_;
  std::size_t f_;
  crypto::SigningKey sk_;
  std::vector<crypto::SymmetricKey> link_keys_;
  std::array<std::uint8_t, 32> r1_;
  crypto::Prg rng_;
  std::shared_ptr<const Pki> pki_;
  EnclaveObserver* observer_ = nullptr;

  ViewNumber v_ = 0;
  std::uint64_t c_ = 0;
  std::optional<CounterValue> lv_;
  std::optional<CounterValue> pending_self_vote_;
  std::optional<CounterValue> secret_issued_for_;
  bool proof_lock_ = false;
  bool nv_voted_ = false;
  std::optional<ViewNumber> transition_target_;
  std::optional<HistoryAnchor> adopted_;
  ReplicaId view_leader_ = 0;
  ReplicaId signer_ = 0;
  std::map<ViewNumber, ReplicaId> elected_;
};

struct Deployment {
  std::shared_ptr<const Pki> pki;
  std::vector<EnclaveSecrets> secrets;
};

// Trusted setup: keys, pairwise link keys and the shared election seed.
// Requires n = 2f + 1.
Deployment trusted_setup(std::size_t n, std::size_t f, crypto::CryptoMode mode, crypto::Prg& rng);

}  // namespace tbft

#pragma once

#include <map>
#include <string>
#include <vector>

#include "tbft/crypto/hash.hpp"
#include "tbft/protocol/messages.hpp"

namespace tbft {

// Deterministic key-value state machine.
class KvStore {
 public:
  // PUT stores and returns "OK", GET returns the value (empty if absent),
  // NOOP returns H(payload). Malformed operations yield an "ERR:" result.
  Bytes apply(const Operation& op);
  crypto::Digest state_digest() const;
  std::size_t size() const { return data_.size(); }
  std::optional<Bytes> get(const std::string& key) const;

 private:
  std::map<std::string, Bytes> data_;
};

crypto::Digest results_digest(const std::vector<Bytes>& results);

}  // namespace tbft

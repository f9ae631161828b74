#include "tbft/protocol/kv.hpp"

namespace tbft {

namespace {
constexpr std::size_t kMaxKey = 256;
}

Bytes KvStore::apply(const Operation& op) {
  switch (op.type) {
    case OpType::Put:
      if (op.key.empty() || op.key.size() > kMaxKey) return to_bytes("ERR:bad-key");
      data_[op.key] = op.value;
      return to_bytes("OK");
    case OpType::Get: {
      if (op.key.empty() || op.key.size() > kMaxKey || !op.value.empty()) {
        return to_bytes("ERR:malformed-get");
      }
      auto it = data_.find(op.key);
      return it == data_.end() ? Bytes{} : it->second;
    }
    case OpType::Noop: {
      if (!op.key.empty()) return to_bytes("ERR:malformed-noop");
      auto d = crypto::sha256(op.value);
      return Bytes(d.bytes.begin(), d.bytes.end());
    }
  }
  return to_bytes("ERR:unknown-op");
}

std::optional<Bytes> KvStore::get(const std::string& key) const {
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

crypto::Digest KvStore::state_digest() const {
  Writer w;
  w.str("tbft/kv").u64(data_.size());
  for (const auto& [k, v] : data_) w.str(k).bytes(v);
  return crypto::sha256(w.data());
}

crypto::Digest results_digest(const std::vector<Bytes>& results) {
  Writer w;
  w.str("tbft/results").u32(static_cast<std::uint32_t>(results.size()));
  for (const auto& r : results) w.bytes(r);
  return crypto::sha256(w.data());
}

}  // namespace tbft

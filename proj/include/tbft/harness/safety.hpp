#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbft/sim/trace.hpp"

namespace tbft::harness {

struct Violation {
  std::string property;
  std::uint64_t seq = 0;  // trace record that exposes it
  std::string detail;
};

struct SafetyReport {
  std::vector<Violation> violations;  // first counterexample per property
  std::size_t honest_replicas = 0;
  std::size_t longest_log = 0;
  std::size_t qcs_checked = 0;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// Property names used in reports.
inline constexpr const char* kPrefix = "prefix";
inline constexpr const char* kSameCounter = "same-counter-execution";
inline constexpr const char* kViewClosure = "view-boundary-closure";
inline constexpr const char* kLogPrefix = "log-prefix";
inline constexpr const char* kNonEquivocation = "non-equivocation";
inline constexpr const char* kOneVote = "one-vote";
inline constexpr const char* kQcSoundness = "qc-soundness";

// Pure function of the trace.
SafetyReport check_safety(const sim::Trace& trace);

// The two enclave-level properties only.
SafetyReport check_enclave_properties(const sim::Trace& trace);

}  // namespace tbft::harness

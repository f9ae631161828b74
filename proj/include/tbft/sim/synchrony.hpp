#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbft/sim/trace.hpp"

namespace tbft::sim {

struct SynchronyViolation {
  std::uint64_t message_id = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint64_t sent = 0;
  std::string problem;  // "late", "dropped" or "lost"
};

struct SynchronyReport {
  std::size_t checked = 0;  // honest-pair sends at or after GST
  std::vector<SynchronyViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Every message between honest nodes sent at or after GST must arrive within delta.
// Messages still in flight when the trace ends are not counted. A trace with no GST
// trivially passes.
SynchronyReport check_partial_synchrony(const Trace& trace);

}  // namespace tbft::sim

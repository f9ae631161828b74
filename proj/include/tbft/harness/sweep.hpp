#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tbft/harness/safety.hpp"
#include "tbft/sim/metrics.hpp"
#include "tbft/sim/scenario.hpp"
#include "tbft/sim/world.hpp"

namespace tbft::harness {

struct RunReport {
  std::string scenario;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool liveness_expected = true;
  bool completed = false;
  std::size_t proven = 0;
  std::size_t requests = 0;
  SafetyReport safety;
  bool synchrony_ok = true;
  sim::Metrics metrics;

  bool failed() const { return !safety.ok() || !synchrony_ok || (liveness_expected && !completed); }
  std::string verdict() const;
};

// Runs one scenario and checks the resulting trace.
RunReport evaluate(const sim::ScenarioConfig& cfg, sim::RunResult* keep = nullptr);

struct SweepOptions {
  std::vector<std::size_t> ns;  // empty: the template's own n
  std::uint64_t seed_from = 1;
  std::uint64_t seed_to = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  bool stop_on_failure = true;
  // Called from worker threads with each finished run.
  std::function<void(const RunReport&, const sim::RunResult&)> on_run;
};

struct SweepResult {
  std::vector<RunReport> runs;  // in (n, seed) order; skipped runs absent after a failure
  std::optional<RunReport> first_failure;
};

SweepResult sweep(const sim::ScenarioConfig& base, const SweepOptions& opts);

nlohmann::ordered_json report_to_json(const RunReport& r);

}  // namespace tbft::harness

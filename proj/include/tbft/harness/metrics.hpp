#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tbft/harness/fit.hpp"
#include "tbft/sim/metrics.hpp"

namespace tbft::harness {

// Every *.json metrics file in a directory, in path order.
std::vector<sim::Metrics> load_metrics_dir(const std::string& dir);

struct ScalingReport {
  std::map<std::size_t, double> per_commit;        // mean over runs at each n
  std::map<std::size_t, double> per_view_change;   // runs without a view change are skipped
  std::map<std::size_t, double> client_per_request;
  std::optional<ComplexityFit> commit_fit;
  std::optional<ComplexityFit> view_change_fit;
  std::vector<std::string> errors;  // why a fit could not be made
};

// Fits inter-replica messages per commit and per view change against n.
ScalingReport scaling(const std::vector<sim::Metrics>& runs, double alpha = 0.05);

nlohmann::ordered_json scaling_to_json(const ScalingReport& r);

}  // namespace tbft::harness

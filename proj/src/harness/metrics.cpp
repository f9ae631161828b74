#include "tbft/harness/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tbft::harness {

namespace fs = std::filesystem;

std::vector<sim::Metrics> load_metrics_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<sim::Metrics> out;
  for (const auto& p : files) {
    std::ifstream in(p);
    try {
      out.push_back(sim::metrics_from_json(nlohmann::json::parse(in)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(p.string() + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::optional<ComplexityFit> fit_means(const std::map<std::size_t, double>& means, double alpha, const char* what,
                                       std::vector<std::string>& errors) {
  std::vector<double> x, y;
  for (const auto& [n, v] : means) {
    x.push_back(static_cast<double>(n));
    y.push_back(v);
  }
  try {
    return complexity_fit(x, y, alpha);
  } catch (const FitError& e) {
    errors.push_back(std::string(what) + ": " + e.what());
    return std::nullopt;
  }
}

}  // namespace

ScalingReport scaling(const std::vector<sim::Metrics>& runs, double alpha) {
  std::map<std::size_t, std::vector<double>> commit, vc, client;
  for (const auto& m : runs) {
    if (m.commits > 0) commit[m.n].push_back(m.messages_per_commit());
    if (m.view_changes > 0) vc[m.n].push_back(m.messages_per_view_change());
    if (m.submitted > 0) client[m.n].push_back(m.client_messages_per_request());
  }
  auto mean = [](const std::map<std::size_t, std::vector<double>>& in) {
    std::map<std::size_t, double> out;
    for (const auto& [n, v] : in) {
      double s = 0;
      for (double d : v) s += d;
      out[n] = s / static_cast<double>(v.size());
    }
    return out;
  };
  ScalingReport r;
  r.per_commit = mean(commit);
  r.per_view_change = mean(vc);
  r.client_per_request = mean(client);
  r.commit_fit = fit_means(r.per_commit, alpha, "messages per commit", r.errors);
  r.view_change_fit = fit_means(r.per_view_change, alpha, "messages per view change", r.errors);
  return r;
}

nlohmann::ordered_json scaling_to_json(const ScalingReport& r) {
  nlohmann::ordered_json j;
  auto series = [](const std::map<std::size_t, double>& m) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& [n, v] : m) a.push_back({{"n", n}, {"value", v}});
    return a;
  };
  j["messages_per_commit"] = series(r.per_commit);
  j["messages_per_view_change"] = series(r.per_view_change);
  j["client_messages_per_request"] = series(r.client_per_request);
  j["commit_fit"] = r.commit_fit ? fit_to_json(*r.commit_fit) : nlohmann::ordered_json(nullptr);
  j["view_change_fit"] = r.view_change_fit ? fit_to_json(*r.view_change_fit) : nlohmann::ordered_json(nullptr);
  j["errors"] = r.errors;
  return j;
}

}  // namespace tbft::harness

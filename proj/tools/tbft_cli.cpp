#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tbft/harness/metrics.hpp"
#include "tbft/harness/safety.hpp"
#include "tbft/harness/sweep.hpp"
#include "tbft/sim/synchrony.hpp"

namespace {

using namespace tbft;

enum Exit : int {
  kOk = 0,
  kUnsafe = 1,
  kLivenessTimeout = 2,
  kSynchrony = 3,
  kBadInput = 4,
};

int exit_for(const harness::RunReport& r) {
  if (!r.safety.ok()) return kUnsafe;
  if (!r.synchrony_ok) return kSynchrony;
  if (r.liveness_expected && !r.completed) return kLivenessTimeout;
  return kOk;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    return {std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--seeds", "expected A..B, got '" + s + "'");
  }
}

sim::ScenarioConfig load(const std::string& path, std::optional<std::uint64_t> seed, const std::string& mode,
                         std::optional<std::size_t> n) {
  auto cfg = sim::load_scenario(path);
  if (seed) cfg.seed = *seed;
  if (mode == "basic") cfg.mode = Mode::Basic;
  if (mode == "pipelined") cfg.mode = Mode::Pipelined;
  if (n) cfg = sim::with_n(cfg, *n);
  return cfg;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& trace_path,
            const std::string& metrics_path, const std::string& mode, std::optional<std::size_t> n) {
  const auto cfg = load(config, seed, mode, n);
  sim::RunResult result;
  const auto rep = harness::evaluate(cfg, &result);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("cannot write " + trace_path);
    sim::write_trace(out, result.trace);
  }
  if (!metrics_path.empty()) write_json(metrics_path, sim::metrics_to_json(rep.metrics));
  std::cout << "scenario=" << (cfg.name.empty() ? config : cfg.name) << " n=" << cfg.n << " seed=" << cfg.seed
            << " mode=" << (cfg.mode == Mode::Basic ? "basic" : "pipelined") << " verdict=" << rep.verdict()
            << " proven=" << rep.proven << "/" << rep.requests << " end_tick=" << result.end_tick
            << " view_changes=" << rep.metrics.view_changes << "\n"
            << "safety: " << rep.safety.summary() << "\n";
  for (std::size_t i = 1; i < rep.safety.violations.size(); ++i) {
    const auto& v = rep.safety.violations[i];
    std::cout << "  also " << v.property << " at seq " << v.seq << ": " << v.detail << "\n";
  }
  return exit_for(rep);
}

int cmd_check_safety(const std::string& path) {
  const auto trace = sim::read_trace_file(path);
  const auto rep = harness::check_safety(trace);
  std::cout << rep.summary() << "\n";
  for (std::size_t i = 1; i < rep.violations.size(); ++i) {
    const auto& v = rep.violations[i];
    std::cout << "  also " << v.property << " at seq " << v.seq << ": " << v.detail << "\n";
  }
  return rep.ok() ? kOk : kUnsafe;
}

int cmd_check_synchrony(const std::string& path) {
  const auto rep = sim::check_partial_synchrony(sim::read_trace_file(path));
  if (rep.ok()) {
    std::cout << "PASS checked=" << rep.checked << "\n";
    return kOk;
  }
  const auto& v = rep.violations.front();
  std::cout << "FAIL message id=" << v.message_id << " " << v.src << "->" << v.dst << " sent at " << v.sent << " "
            << v.problem << " (" << rep.violations.size() << " total)\n";
  return kSynchrony;
}

int cmd_metrics(const std::string& path) {
  std::cout << sim::metrics_to_json(sim::compute_metrics(sim::read_trace_file(path))).dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const std::string& tmpl, const std::string& seeds, const std::vector<std::size_t>& ns,
              unsigned threads, const std::string& out_path, const std::string& metrics_dir, const std::string& mode,
              bool keep_going) {
  const auto base = load(tmpl, std::nullopt, mode, std::nullopt);
  harness::SweepOptions opts;
  std::tie(opts.seed_from, opts.seed_to) = parse_seed_range(seeds);
  opts.ns = ns;
  opts.threads = threads;
  opts.stop_on_failure = !keep_going;
  if (!metrics_dir.empty()) {
    std::filesystem::create_directories(metrics_dir);
    opts.on_run = [&](const harness::RunReport& r, const sim::RunResult&) {
      std::ostringstream name;
      name << metrics_dir << "/" << (r.scenario.empty() ? "run" : r.scenario) << "-n" << r.n << "-s" << r.seed
           << ".json";
      write_json(name.str(), sim::metrics_to_json(r.metrics));
    };
  }
  const auto res = harness::sweep(base, opts);

  std::map<std::string, std::size_t> verdicts;
  std::map<std::size_t, std::vector<sim::Metrics>> by_n;
  for (const auto& r : res.runs) {
    ++verdicts[r.verdict()];
    by_n[r.n].push_back(r.metrics);
  }
  nlohmann::ordered_json j;
  j["template"] = tmpl;
  j["seeds"] = {opts.seed_from, opts.seed_to};
  j["runs"] = res.runs.size();
  j["verdicts"] = verdicts;
  nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
  for (const auto& [n, ms] : by_n) {
    double commits = 0, rounds = 0, normal = 0, vcs = 0, vcm = 0, lat = 0;
    std::size_t lat_runs = 0;
    for (const auto& m : ms) {
      commits += static_cast<double>(m.commits);
      rounds += static_cast<double>(m.voting_rounds);
      normal += static_cast<double>(m.normal_messages);
      vcs += static_cast<double>(m.view_changes);
      vcm += static_cast<double>(m.view_change_messages);
      if (m.commit_latency.count > 0) {
        lat += m.commit_latency.mean;
        ++lat_runs;
      }
    }
    per_n.push_back({{"n", n},
                     {"runs", ms.size()},
                     {"commits", commits},
                     {"commits_per_round", rounds == 0 ? 0.0 : commits / rounds},
                     {"messages_per_commit", commits == 0 ? 0.0 : normal / commits},
                     {"view_changes", vcs},
                     {"messages_per_view_change", vcs == 0 ? 0.0 : vcm / vcs},
                     {"mean_commit_latency_ticks", lat_runs == 0 ? 0.0 : lat / static_cast<double>(lat_runs)}});
  }
  j["per_n"] = per_n;
  if (res.first_failure) j["first_failure"] = harness::report_to_json(*res.first_failure);
  if (!out_path.empty()) write_json(out_path, j);
  std::cout << j.dump(2) << "\n";
  if (res.first_failure) {
    std::cerr << "sweep failed: config=" << tmpl << " n=" << res.first_failure->n
              << " seed=" << res.first_failure->seed << " verdict=" << res.first_failure->verdict() << "\n";
    return exit_for(*res.first_failure);
  }
  return kOk;
}

int cmd_fit(const std::string& dir, double alpha) {
  const auto rep = harness::scaling(harness::load_metrics_dir(dir), alpha);
  std::cout << harness::scaling_to_json(rep).dump(2) << "\n";
  if (!rep.commit_fit && !rep.view_change_fit) {
    for (const auto& e : rep.errors) std::cerr << "fit: " << e << "\n";
    return kBadInput;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and checkers for a trusted-counter BFT protocol"};
  app.require_subcommand(1);

  std::string config, trace_path, metrics_path, mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("--config", config, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--trace", trace_path, "write the JSONL trace here");
  run->add_option("--metrics", metrics_path, "write metrics JSON here");
  run->add_option("--mode", mode, "override the protocol mode")->check(CLI::IsMember({"basic", "pipelined"}));
  run->add_option("--n", n, "override the replica count (f = (n-1)/2)");

  std::string check_trace;
  auto* check = app.add_subcommand("check-safety", "re-verify safety from a stored trace");
  check->add_option("--trace", check_trace, "JSONL trace")->required()->check(CLI::ExistingFile);

  std::string sync_trace;
  auto* sync = app.add_subcommand("check-synchrony", "verify the post-GST delivery bound in a stored trace");
  sync->add_option("--trace", sync_trace, "JSONL trace")->required()->check(CLI::ExistingFile);

  std::string metrics_trace;
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a stored trace");
  metrics->add_option("--trace", metrics_trace, "JSONL trace")->required()->check(CLI::ExistingFile);

  std::string tmpl, seeds = "1..1", out_path, sweep_metrics, sweep_mode;
  std::vector<std::size_t> ns;
  unsigned threads = 0;
  bool keep_going = false;
  auto* sw = app.add_subcommand("sweep", "run a template across seeds and replica counts");
  sw->add_option("--template", tmpl, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sw->add_option("--seeds", seeds, "seed range A..B");
  sw->add_option("--n-list", ns, "replica counts, e.g. 3,5,9")->delimiter(',');
  sw->add_option("--threads", threads, "worker threads (0: all cores)");
  sw->add_option("--out", out_path, "write the aggregated report here");
  sw->add_option("--metrics-dir", sweep_metrics, "write one metrics file per run here");
  sw->add_option("--mode", sweep_mode, "override the protocol mode")->check(CLI::IsMember({"basic", "pipelined"}));
  sw->add_flag("--keep-going", keep_going, "do not stop at the first failing run");

  std::string fit_dir;
  double alpha = 0.05;
  auto* fit = app.add_subcommand("fit", "fit message counts against n");
  fit->add_option("--metrics-dir", fit_dir, "directory of metrics JSON files")->required();
  fit->add_option("--alpha", alpha, "significance level for the quadratic term");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, seed, trace_path, metrics_path, mode, n);
    if (*check) return cmd_check_safety(check_trace);
    if (*sync) return cmd_check_synchrony(sync_trace);
    if (*metrics) return cmd_metrics(metrics_trace);
    if (*sw) return cmd_sweep(tmpl, seeds, ns, threads, out_path, sweep_metrics, sweep_mode, keep_going);
    if (*fit) return cmd_fit(fit_dir, alpha);
  } catch (const sim::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kOk;
}

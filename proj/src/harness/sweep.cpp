#include "tbft/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "tbft/sim/synchrony.hpp"

namespace tbft::harness {

std::string RunReport::verdict() const {
  if (!safety.ok()) return "unsafe";
  if (!synchrony_ok) return "synchrony-violated";
  if (!completed) return liveness_expected ? "liveness-timeout" : "safe-timeout";
  return "ok";
}

RunReport evaluate(const sim::ScenarioConfig& cfg, sim::RunResult* keep) {
  auto result = sim::run_scenario(cfg);
  RunReport r;
  r.scenario = cfg.name;
  r.n = cfg.n;
  r.seed = cfg.seed;
  r.liveness_expected = cfg.expect == "liveness";
  r.completed = result.completed;
  r.proven = result.proven;
  r.requests = result.requests;
  r.safety = check_safety(result.trace);
  r.synchrony_ok = sim::check_partial_synchrony(result.trace).ok();
  r.metrics = result.metrics;
  if (keep) *keep = std::move(result);
  return r;
}

SweepResult sweep(const sim::ScenarioConfig& base, const SweepOptions& opts) {
  if (opts.seed_to < opts.seed_from) throw std::invalid_argument("empty seed range");
  std::vector<sim::ScenarioConfig> jobs;
  const auto ns = opts.ns.empty() ? std::vector<std::size_t>{base.n} : opts.ns;
  for (auto n : ns) {
    auto cfg = sim::with_n(base, n);
    for (auto s = opts.seed_from; s <= opts.seed_to; ++s) {
      cfg.seed = s;
      jobs.push_back(cfg);
    }
  }

  std::vector<std::optional<RunReport>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex callback_mu;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      sim::RunResult result;
      auto rep = evaluate(jobs[i], &result);
      if (opts.on_run) {
        std::lock_guard lock(callback_mu);
        opts.on_run(rep, result);
      }
      if (rep.failed() && opts.stop_on_failure) stop.store(true);
      slots[i] = std::move(rep);
    }
  };
  unsigned threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult out;
  for (auto& s : slots) {
    if (!s) continue;
    if (s->failed() && !out.first_failure) out.first_failure = *s;
    out.runs.push_back(std::move(*s));
  }
  return out;
}

nlohmann::ordered_json report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["verdict"] = r.verdict();
  j["expect"] = r.liveness_expected ? "liveness" : "safety";
  j["completed"] = r.completed;
  j["proven"] = r.proven;
  j["requests"] = r.requests;
  j["safety"] = r.safety.summary();
  j["synchrony"] = r.synchrony_ok;
  j["metrics"] = sim::metrics_to_json(r.metrics);
  return j;
}

}  // namespace tbft::harness

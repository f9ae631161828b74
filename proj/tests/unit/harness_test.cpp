#include <cmath>
#include <sstream>

#include "doctest.h"
#include "tbft/harness/fit.hpp"
#include "tbft/harness/metrics.hpp"
#include "tbft/harness/safety.hpp"
#include "tbft/harness/sweep.hpp"
#include "tbft/sim/world.hpp"

using namespace tbft;
using namespace tbft::harness;
using sim::TraceRecord;

namespace {

// Hand-written traces for n=3, f=1.
class TraceBuilder {
 public:
  explicit TraceBuilder(const std::string& corrupt = "none") {
    add("header", std::nullopt, {}, "",
        "schema=1 n=3 f=1 delta=10 gst=0 mode=basic seed=1 crypto=sim corrupt=" + corrupt +
            " clients=1 scenario=synthetic");
  }

  TraceBuilder& add(const std::string& kind, std::optional<std::uint32_t> src, std::optional<CounterValue> c,
                    std::string digest, std::string note) {
    TraceRecord r;
    r.tick = t_.size();
    r.seq = t_.size();
    r.kind = kind;
    r.src = src;
    r.counter = c;
    r.digest = std::move(digest);
    r.note = std::move(note);
    t_.push_back(std::move(r));
    return *this;
  }

  TraceBuilder& view(std::uint32_t replica, ViewNumber v, std::uint32_t leader) {
    return add("view", replica, {}, "", "view=" + std::to_string(v) + " leader=" + std::to_string(leader));
  }
  TraceBuilder& exec(std::uint32_t replica, std::size_t pos, CounterValue c, const std::string& d) {
    return add("execute", replica, c, d, "pos=" + std::to_string(pos) + " ops=1");
  }
  TraceBuilder& share(std::uint32_t replica, CounterValue c, const std::string& d) {
    return add("enclave_share", replica, c, d, "signer=0");
  }
  TraceBuilder& qc(std::uint32_t replica, CounterValue c, const std::string& d, const std::string& phase = "commit") {
    return add("qc", replica, c, d, "phase=" + phase);
  }
  TraceBuilder& propose(std::uint32_t leader, CounterValue c, const std::string& d) {
    return add("enclave_sign", leader, c, d, "purpose=proposal");
  }

  // All three replicas in view 0, one entry committed and executed everywhere.
  TraceBuilder& honest_prefix() {
    for (std::uint32_t i = 0; i < 3; ++i) view(i, 0, 0);
    propose(0, {0, 0}, "b1");
    share(0, {0, 0}, "s1");
    share(1, {0, 0}, "s1");
    qc(0, {0, 0}, "s1");
    for (std::uint32_t i = 0; i < 3; ++i) exec(i, 0, {0, 0}, "b1");
    return *this;
  }

  const sim::Trace& trace() const { return t_; }

 private:
  sim::Trace t_;
};

bool has(const SafetyReport& r, const char* property) {
  for (const auto& v : r.violations) {
    if (v.property == property) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("an honest synthetic trace passes") {
  TraceBuilder b;
  b.honest_prefix();
  auto r = check_safety(b.trace());
  CHECK_MESSAGE(r.ok(), r.summary());
  CHECK(r.honest_replicas == 3);
  CHECK(r.longest_log == 1);
  CHECK(r.qcs_checked == 1);
  CHECK(r.summary().rfind("PASS", 0) == 0);
}

TEST_CASE("two replicas executing different batches at one counter") {
  TraceBuilder b;
  b.honest_prefix().exec(0, 1, {0, 1}, "x").exec(1, 1, {0, 1}, "y");
  auto r = check_safety(b.trace());
  CHECK(has(r, kSameCounter));
  CHECK(r.summary().rfind("FAIL", 0) == 0);
}

TEST_CASE("a corrupt replica's log is ignored") {
  TraceBuilder b("2");
  b.honest_prefix().exec(2, 1, {0, 1}, "junk").exec(0, 1, {0, 1}, "x");
  auto r = check_safety(b.trace());
  CHECK_MESSAGE(r.ok(), r.summary());
  CHECK(r.honest_replicas == 2);
}

TEST_CASE("diverging logs break the prefix property") {
  TraceBuilder b;
  b.honest_prefix().exec(0, 1, {0, 1}, "x").exec(0, 2, {0, 2}, "z").exec(1, 1, {0, 2}, "z");
  CHECK(has(check_safety(b.trace()), kPrefix));

  TraceBuilder gap;
  gap.honest_prefix().exec(1, 2, {0, 1}, "x");
  CHECK(has(check_safety(gap.trace()), kPrefix));
}

TEST_CASE("replicas leaving a view with different executed counts") {
  TraceBuilder b;
  b.honest_prefix().exec(0, 1, {0, 1}, "x").view(0, 1, 1).view(1, 1, 1);
  auto r = check_safety(b.trace());
  CHECK(has(r, kViewClosure));
  CHECK_FALSE(has(r, kPrefix));
}

TEST_CASE("leaving a view without executing an entry that had a QC") {
  TraceBuilder b;
  b.honest_prefix().share(0, {0, 1}, "s2").share(1, {0, 1}, "s2").qc(0, {0, 1}, "s2");
  b.view(0, 1, 1).view(1, 1, 1);
  CHECK(has(check_safety(b.trace()), kViewClosure));

  // New-view QCs do not count as view 0 entries.
  TraceBuilder nv;
  nv.honest_prefix().share(0, {0, 1}, "s2").share(1, {0, 1}, "s2").qc(0, {0, 1}, "s2", "new-view");
  nv.view(0, 1, 1).view(1, 1, 1);
  CHECK_MESSAGE(check_safety(nv.trace()).ok(), check_safety(nv.trace()).summary());
}

TEST_CASE("a log proof must end in the view leader's proposal") {
  TraceBuilder good;
  good.honest_prefix().add("log_proof", 1, CounterValue{1, 0}, "b1", "highest=(0,0)");
  CHECK_MESSAGE(check_safety(good.trace()).ok(), check_safety(good.trace()).summary());

  TraceBuilder bad;
  bad.honest_prefix().add("log_proof", 1, CounterValue{1, 0}, "forged", "highest=(0,0)");
  CHECK(has(check_safety(bad.trace()), kLogPrefix));

  TraceBuilder wrong_signer;
  wrong_signer.honest_prefix().propose(1, {0, 1}, "b2").add("log_accepted", 2, CounterValue{1, 0}, "b2",
                                                             "highest=(1,0)");
  CHECK(has(check_safety(wrong_signer.trace()), kLogPrefix));
}

TEST_CASE("an enclave signing two proposals at one counter") {
  TraceBuilder b;
  b.honest_prefix().propose(0, {0, 0}, "b1'");
  CHECK(has(check_safety(b.trace()), kNonEquivocation));
  CHECK(has(check_enclave_properties(b.trace()), kNonEquivocation));
  // Different purposes at the same counter are distinct bindings.
  TraceBuilder ok;
  ok.honest_prefix().add("enclave_sign", 0, CounterValue{0, 0}, "c1", "purpose=commitment");
  CHECK(check_enclave_properties(ok.trace()).ok());
}

TEST_CASE("an enclave releasing two shares at one counter") {
  TraceBuilder b;
  b.honest_prefix().share(1, {0, 0}, "other");
  auto r = check_enclave_properties(b.trace());
  CHECK(has(r, kOneVote));
  CHECK_FALSE(has(r, kNonEquivocation));
}

TEST_CASE("QCs and verified client proofs need f+1 released shares") {
  TraceBuilder b;
  b.honest_prefix().share(0, {0, 1}, "s2").qc(0, {0, 1}, "s2");
  CHECK(has(check_safety(b.trace()), kQcSoundness));

  TraceBuilder proof;
  proof.honest_prefix().add("client_proof", 3, CounterValue{0, 1}, "s9", "req=1 proof=commitment verified=1");
  CHECK(has(check_safety(proof.trace()), kQcSoundness));

  TraceBuilder unverified;
  unverified.honest_prefix().add("client_proof", 3, CounterValue{0, 1}, "s9", "req=1 proof=commitment verified=0");
  CHECK(check_safety(unverified.trace()).ok());
}

TEST_CASE("only the first counterexample per property is kept") {
  TraceBuilder b;
  b.honest_prefix().propose(0, {0, 0}, "a").propose(0, {0, 0}, "b");
  auto r = check_safety(b.trace());
  CHECK(r.violations.size() == 1);
  CHECK(r.violations[0].seq == 11);
}

TEST_CASE("traces without a header are rejected") {
  sim::Trace empty;
  CHECK_THROWS_AS(check_safety(empty), std::runtime_error);
  TraceBuilder b;
  b.honest_prefix();
  auto headless = b.trace();
  headless.erase(headless.begin());
  CHECK_THROWS_AS(check_safety(headless), std::runtime_error);
  auto no_f = b.trace();
  no_f.front().note = "n=3 delta=10";
  CHECK_THROWS_AS(check_safety(no_f), std::runtime_error);
}

TEST_CASE("simulated traces of every bundled scenario pass the checker") {
  for (const char* name : {"happy-path", "leader-crash", "leader-censorship", "equivocation-attempt", "double-vote",
                           "fake-qc", "log-rollback", "partition-stale-leader", "dos-on-leader"}) {
    CAPTURE(name);
    auto cfg = sim::load_scenario(std::string(TBFT_SCENARIO_DIR) + "/" + name + ".json");
    auto report = evaluate(cfg);
    CHECK_MESSAGE(report.safety.ok(), report.safety.summary());
    CHECK(report.synchrony_ok);
    CHECK(report.verdict() == "ok");
  }
}

// Reference values computed with numpy.polyfit and scipy.stats.f.sf.
TEST_CASE("least squares and the quadratic F-test match frozen reference values") {
  const std::vector<double> x{3, 5, 9, 17, 33};
  {
    auto fit = complexity_fit(x, {10.2, 19.7, 40.3, 79.1, 160.4});
    CHECK(fit.linear.slope == doctest::Approx(5.00625).epsilon(1e-12));
    CHECK(fit.linear.intercept == doctest::Approx(-5.14375).epsilon(1e-12));
    CHECK(fit.linear.r2 == doctest::Approx(0.9999229976300363).epsilon(1e-12));
    CHECK(fit.quadratic.coefficient == doctest::Approx(0.0038978494623660696).epsilon(1e-9));
    CHECK(fit.quadratic.f_statistic == doctest::Approx(2.01479706877116).epsilon(1e-9));
    CHECK(fit.quadratic.p_value == doctest::Approx(0.29159134920183305).epsilon(1e-9));
    CHECK_FALSE(fit.quadratic.significant);
    CHECK(fit.linear_ok());
  }
  {
    auto fit = complexity_fit(x, {9.5, 25.2, 80.9, 290.1, 1090.3});
    CHECK(fit.linear.slope == doctest::Approx(36.538642473118266).epsilon(1e-12));
    CHECK(fit.linear.intercept == doctest::Approx(-190.41780913978474).epsilon(1e-12));
    CHECK(fit.linear.r2 == doctest::Approx(0.9544260529954295).epsilon(1e-12));
    CHECK(fit.quadratic.coefficient == doctest::Approx(0.999992093611638).epsilon(1e-9));
    CHECK(fit.quadratic.f_statistic == doctest::Approx(148442.33248477263).epsilon(1e-7));
    CHECK(fit.quadratic.p_value == doctest::Approx(6.7365547175152975e-06).epsilon(1e-6));
    CHECK(fit.quadratic.significant);
    CHECK_FALSE(fit.linear_ok());
  }
  {
    auto fit = complexity_fit({3, 3, 5, 5, 9, 9, 17, 17, 33, 33},
                              {10.1, 9.9, 19.8, 20.3, 40.0, 39.6, 79.5, 80.1, 159.2, 160.9});
    CHECK(fit.linear.slope == doctest::Approx(5.001209677419353).epsilon(1e-12));
    CHECK(fit.linear.intercept == doctest::Approx(-5.076209677419316).epsilon(1e-12));
    CHECK(fit.linear.r2 == doctest::Approx(0.9999334285162189).epsilon(1e-12));
    CHECK(fit.quadratic.coefficient == doctest::Approx(0.0011859582542694566).epsilon(1e-9));
    CHECK(fit.quadratic.f_statistic == doctest::Approx(0.3983711048158675).epsilon(1e-9));
    CHECK(fit.quadratic.p_value == doctest::Approx(0.5479789265393437).epsilon(1e-9));
  }
}

TEST_CASE("exactly linear data has no significant quadratic term") {
  const std::vector<double> x{3, 5, 9, 17, 33};
  std::vector<double> y;
  for (double v : x) y.push_back(5 * (v - 1));
  auto fit = complexity_fit(x, y);
  CHECK(fit.linear.r2 == doctest::Approx(1.0));
  CHECK(fit.linear.slope == doctest::Approx(5.0));
  CHECK(fit.quadratic.f_statistic == 0.0);
  CHECK(fit.quadratic.p_value == 1.0);
  CHECK(fit.linear_ok());

  std::vector<double> sq;
  for (double v : x) sq.push_back(v * v);
  auto exact_quad = complexity_fit(x, sq);
  CHECK(exact_quad.quadratic.significant);
  CHECK(std::isinf(exact_quad.quadratic.f_statistic));
}

TEST_CASE("fit input errors") {
  CHECK_THROWS_AS(fit_linear({1, 2}, {1}), FitError);
  CHECK_THROWS_AS(fit_linear({1}, {1}), FitError);
  CHECK_THROWS_AS(complexity_fit({3, 3, 5, 5, 9, 9}, {1, 2, 3, 4, 5, 6}), FitError);
  auto j = fit_to_json(complexity_fit({1, 2, 3, 4}, {2, 4, 6, 8.5}));
  CHECK(j.contains("slope"));
  CHECK(j.contains("quadratic_p"));
}

TEST_CASE("scaling fits message counts per n") {
  std::vector<sim::Metrics> runs;
  for (std::size_t n : {3u, 5u, 9u, 17u, 33u}) {
    sim::Metrics m;
    m.n = n;
    m.commits = 10;
    m.normal_messages = 10 * 5 * (n - 1);
    m.view_changes = n == 3 ? 0 : 1;
    m.view_change_messages = 4 * (n - 1) - 2;
    m.submitted = 10;
    m.client_messages = 20;
    runs.push_back(m);
  }
  auto rep = scaling(runs);
  CHECK(rep.per_commit.at(9) == doctest::Approx(40.0));
  CHECK(rep.client_per_request.at(33) == doctest::Approx(2.0));
  REQUIRE(rep.commit_fit);
  CHECK(rep.commit_fit->linear.slope == doctest::Approx(5.0));
  CHECK(rep.commit_fit->linear_ok());
  CHECK(rep.per_view_change.count(3) == 0);
  REQUIRE(rep.view_change_fit);
  CHECK(rep.view_change_fit->linear.slope == doctest::Approx(4.0));
  CHECK(rep.errors.empty());

  runs.resize(2);
  auto few = scaling(runs);
  CHECK_FALSE(few.commit_fit);
  CHECK_FALSE(few.errors.empty());
}

TEST_CASE("sweeps are deterministic regardless of threads") {
  auto cfg = sim::load_scenario(std::string(TBFT_SCENARIO_DIR) + "/fake-qc.json");
  SweepOptions opts;
  opts.ns = {3, 5};
  opts.seed_from = 1;
  opts.seed_to = 4;
  opts.threads = 1;
  auto one = sweep(cfg, opts);
  opts.threads = 3;
  auto three = sweep(cfg, opts);
  REQUIRE(one.runs.size() == 8);
  REQUIRE(three.runs.size() == 8);
  CHECK_FALSE(one.first_failure);
  for (std::size_t i = 0; i < one.runs.size(); ++i) {
    CHECK(one.runs[i].n == three.runs[i].n);
    CHECK(one.runs[i].seed == three.runs[i].seed);
    CHECK(one.runs[i].metrics == three.runs[i].metrics);
    CHECK(report_to_json(one.runs[i]) == report_to_json(three.runs[i]));
  }
  CHECK(one.runs.front().n == 3);
  CHECK(one.runs.back().n == 5);
}

TEST_CASE("a sweep reports the first failing run") {
  // Never stabilizes and is too short to finish, yet claims liveness.
  auto cfg = sim::parse_scenario(R"({"schema":1,"n":3,"gst":"never","max_ticks":30,"seed":1,
    "clients":{"count":1,"requests":3}})");
  SweepOptions opts;
  opts.seed_from = 1;
  opts.seed_to = 5;
  opts.threads = 1;
  auto res = sweep(cfg, opts);
  REQUIRE(res.first_failure);
  CHECK(res.first_failure->seed == 1);
  CHECK(res.first_failure->verdict() == "liveness-timeout");
  CHECK(res.runs.size() < 5);

  opts.stop_on_failure = false;
  CHECK(sweep(cfg, opts).runs.size() == 5);
  cfg.expect = "safety";
  auto safe = evaluate(cfg);
  CHECK_FALSE(safe.failed());
  CHECK(safe.verdict() == "safe-timeout");
}

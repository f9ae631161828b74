#include "tbft/harness/safety.hpp"

#include <map>
#include <cstdio>
#include <stdexcept>
#include <tuple>

namespace tbft::harness {

using sim::note_field;
using sim::TraceHeader;
using sim::note_u64;
using sim::TraceRecord;

namespace {

struct Exec {
  CounterValue counter;
  std::string digest;
  std::uint64_t seq;
};

class Checker {
 public:
  Checker(const sim::Trace& trace, SafetyReport& report) : t_(trace), rep_(report) {}

  void fail(const char* property, std::uint64_t seq, std::string detail) {
    for (const auto& v : rep_.violations) {
      if (v.property == property) return;
    }
    rep_.violations.push_back({property, seq, std::move(detail)});
  }

  void non_equivocation() {
    std::map<std::tuple<std::uint32_t, std::string, CounterValue>, std::string> seen;
    for (const auto& r : t_) {
      if (r.kind != "enclave_sign" || !r.src || !r.counter) continue;
      auto key = std::make_tuple(*r.src, r.note, *r.counter);
      auto [it, fresh] = seen.emplace(key, r.digest);
      if (!fresh) {
        fail(kNonEquivocation, r.seq,
             "enclave " + std::to_string(*r.src) + " signed twice at " + r.counter->str() + " (" + r.note + ")");
      }
    }
  }

  void one_vote() {
    std::map<std::pair<std::uint32_t, CounterValue>, std::uint64_t> seen;
    for (const auto& r : t_) {
      if (r.kind != "enclave_share" || !r.src || !r.counter) continue;
      if (!seen.emplace(std::make_pair(*r.src, *r.counter), r.seq).second) {
        fail(kOneVote, r.seq, "enclave " + std::to_string(*r.src) + " released two shares at " + r.counter->str());
      }
    }
  }

  void qc_soundness(std::size_t f) {
    std::map<std::pair<CounterValue, std::string>, std::set<std::uint32_t>> shares;
    for (const auto& r : t_) {
      if (r.kind == "enclave_share" && r.src && r.counter) {
        shares[{*r.counter, r.digest}].insert(*r.src);
        continue;
      }
      const bool qc = r.kind == "qc";
      const bool proof = r.kind == "client_proof" && note_field(r.note, "verified") == std::string("1");
      if ((!qc && !proof) || !r.counter) continue;
      ++rep_.qcs_checked;
      auto it = shares.find({*r.counter, r.digest});
      const auto have = it == shares.end() ? 0 : it->second.size();
      if (have < f + 1) {
        fail(kQcSoundness, r.seq,
             std::string(qc ? "QC" : "client proof") + " at " + r.counter->str() + " backed by " +
                 std::to_string(have) + " released shares, need " + std::to_string(f + 1));
      }
    }
  }

  void execution(const TraceHeader& h) {
    std::map<std::uint32_t, std::vector<Exec>> logs;
    // Leader of each view and, per replica, when it left each view.
    std::map<ViewNumber, std::uint32_t> leaders;
    std::map<std::uint32_t, ViewNumber> current;
    struct Exit {
      std::uint32_t replica;
      ViewNumber view;
      std::size_t executed;
      std::uint64_t seq;
    };
    std::vector<Exit> exits;
    std::map<ViewNumber, std::pair<std::uint64_t, std::uint64_t>> max_qc;  // view -> (counter, seq)
    std::map<std::pair<std::uint32_t, ViewNumber>, std::size_t> executed_in;

    auto honest = [&](std::uint32_t id) { return id < h.n && h.corrupt.count(id) == 0; };

    for (const auto& r : t_) {
      if (!r.src || !honest(*r.src)) continue;
      const auto id = *r.src;
      if (r.kind == "execute") {
        if (!r.counter) continue;
        auto& log = logs[id];
        const auto pos = note_u64(r.note, "pos");
        if (!pos || *pos != log.size()) {
          fail(kPrefix, r.seq, "replica " + std::to_string(id) + " execution positions are not consecutive");
        }
        log.push_back({*r.counter, r.digest, r.seq});
        ++executed_in[{id, r.counter->view}];
      } else if (r.kind == "view") {
        const auto v = note_u64(r.note, "view");
        const auto l = note_u64(r.note, "leader");
        if (!v || !l) throw std::runtime_error("malformed view record at seq " + std::to_string(r.seq));
        leaders.emplace(static_cast<ViewNumber>(*v), static_cast<std::uint32_t>(*l));
        auto it = current.find(id);
        if (it != current.end() && it->second < *v) {
          exits.push_back({id, it->second, executed_in[{id, it->second}], r.seq});
        }
        current[id] = static_cast<ViewNumber>(*v);
      } else if (r.kind == "qc" && r.counter && note_field(r.note, "phase") != std::string("new-view")) {
        auto& m = max_qc[r.counter->view];
        if (r.counter->counter + 1 > m.first) m = {r.counter->counter + 1, r.seq};
      }
    }
    rep_.honest_replicas = 0;
    for (std::uint32_t i = 0; i < h.n; ++i) rep_.honest_replicas += honest(i) ? 1 : 0;

    // Pairwise prefix against the longest log.
    const std::vector<Exec>* longest = nullptr;
    for (const auto& [id, log] : logs) {
      if (!longest || log.size() > longest->size()) longest = &log;
    }
    if (longest) {
      rep_.longest_log = longest->size();
      for (const auto& [id, log] : logs) {
        for (std::size_t k = 0; k < log.size(); ++k) {
          const auto& a = log[k];
          const auto& b = (*longest)[k];
          if (a.counter != b.counter || a.digest != b.digest) {
            fail(kPrefix, a.seq,
                 "replica " + std::to_string(id) + " position " + std::to_string(k) + " executed " + a.counter.str() +
                     " but the longest log has " + b.counter.str());
            break;
          }
        }
      }
    }

    // No two honest replicas execute different batches at one counter value.
    std::map<CounterValue, std::pair<std::string, std::uint32_t>> at;
    for (const auto& [id, log] : logs) {
      for (const auto& e : log) {
        auto [it, fresh] = at.emplace(e.counter, std::make_pair(e.digest, id));
        if (!fresh && it->second.first != e.digest) {
          fail(kSameCounter, e.seq,
               "replicas " + std::to_string(it->second.second) + " and " + std::to_string(id) +
                   " executed different batches at " + e.counter.str());
        }
      }
    }

    // Replicas leaving a view executed the same entries of it, covering every QC formed there.
    std::map<ViewNumber, std::pair<std::size_t, std::uint32_t>> closure;
    for (const auto& x : exits) {
      auto [it, fresh] = closure.emplace(x.view, std::make_pair(x.executed, x.replica));
      if (!fresh && it->second.first != x.executed) {
        fail(kViewClosure, x.seq,
             "replicas " + std::to_string(it->second.second) + " and " + std::to_string(x.replica) + " left view " +
                 std::to_string(x.view) + " after executing " + std::to_string(it->second.first) + " and " +
                 std::to_string(x.executed) + " entries");
      }
      auto q = max_qc.find(x.view);
      if (q != max_qc.end() && x.executed < q->second.first) {
        fail(kViewClosure, x.seq,
             "replica " + std::to_string(x.replica) + " left view " + std::to_string(x.view) + " after " +
                 std::to_string(x.executed) + " entries, but a QC covers " + std::to_string(q->second.first));
      }
    }

    // Every log proof's highest entry is the view leader's unique proposal at that counter.
    std::map<std::pair<std::uint32_t, CounterValue>, std::string> proposals;
    for (const auto& r : t_) {
      if (r.kind == "enclave_sign" && r.src && r.counter && r.note == "purpose=proposal") {
        proposals.emplace(std::make_pair(*r.src, *r.counter), r.digest);
      }
      if ((r.kind != "log_proof" && r.kind != "log_accepted") || r.digest.empty()) continue;
      const auto hs = note_field(r.note, "highest");
      if (!hs || !r.counter) continue;
      unsigned long long c = 0, v = 0;
      if (std::sscanf(hs->c_str(), "(%llu,%llu)", &c, &v) != 2) continue;
      const CounterValue hc{static_cast<ViewNumber>(v), c};
      auto l = leaders.find(hc.view);
      if (l == leaders.end()) continue;
      auto p = proposals.find({l->second, hc});
      if (p == proposals.end() || p->second != r.digest) {
        fail(kLogPrefix, r.seq,
             "log proof by " + std::to_string(r.dst.value_or(*r.src)) + " ends in " + hc.str() +
                 " which is not the view leader's proposal at that counter");
      }
    }
  }

 private:
  const sim::Trace& t_;
  SafetyReport& rep_;
};

}  // namespace

std::string SafetyReport::summary() const {
  if (ok()) {
    return "PASS honest=" + std::to_string(honest_replicas) + " longest_log=" + std::to_string(longest_log) +
           " qcs=" + std::to_string(qcs_checked);
  }
  const auto& v = violations.front();
  return "FAIL " + v.property + " at seq " + std::to_string(v.seq) + ": " + v.detail;
}

SafetyReport check_safety(const sim::Trace& trace) {
  SafetyReport rep;
  const auto h = sim::parse_header(trace);
  Checker c(trace, rep);
  c.execution(h);
  c.non_equivocation();
  c.one_vote();
  c.qc_soundness(h.f);
  return rep;
}

SafetyReport check_enclave_properties(const sim::Trace& trace) {
  SafetyReport rep;
  Checker c(trace, rep);
  c.non_equivocation();
  c.one_vote();
  return rep;
}

}  // namespace tbft::harness

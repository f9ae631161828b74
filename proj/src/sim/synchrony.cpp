#include "tbft/sim/synchrony.hpp"

#include <map>

namespace tbft::sim {

SynchronyReport check_partial_synchrony(const Trace& trace) {
  SynchronyReport rep;
  const auto h = parse_header(trace);
  if (!h.gst) return rep;
  auto honest = [&](std::uint32_t id) { return h.corrupt.count(id) == 0; };

  struct Pending {
    std::uint32_t src;
    std::uint32_t dst;
    std::uint64_t sent;
    bool delivered = false;
  };
  std::map<std::uint64_t, Pending> watch;
  const std::uint64_t end = trace.empty() ? 0 : trace.back().tick;

  for (const auto& r : trace) {
    if (!r.src || !r.dst) continue;
    const auto id = note_u64(r.note, "id");
    if (!id) continue;
    if (r.kind == "send") {
      if (r.tick >= *h.gst && honest(*r.src) && honest(*r.dst)) {
        watch.emplace(*id, Pending{*r.src, *r.dst, r.tick});
        ++rep.checked;
      }
      continue;
    }
    auto it = watch.find(*id);
    if (it == watch.end()) continue;
    if (r.kind == "deliver" && !it->second.delivered) {
      it->second.delivered = true;
      if (r.tick > it->second.sent + h.delta) {
        rep.violations.push_back({*id, it->second.src, it->second.dst, it->second.sent, "late"});
      }
    } else if (r.kind == "drop") {
      it->second.delivered = true;
      rep.violations.push_back({*id, it->second.src, it->second.dst, it->second.sent, "dropped"});
    }
  }
  for (const auto& [id, p] : watch) {
    if (!p.delivered && p.sent + h.delta < end) rep.violations.push_back({id, p.src, p.dst, p.sent, "lost"});
  }
  return rep;
}

}  // namespace tbft::sim

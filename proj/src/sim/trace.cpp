#include "tbft/sim/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tbft::sim {

using nlohmann::ordered_json;

std::string to_json_line(const TraceRecord& r) {
  ordered_json j;
  j["tick"] = r.tick;
  j["seq"] = r.seq;
  j["kind"] = r.kind;
  j["src"] = r.src ? ordered_json(*r.src) : ordered_json(nullptr);
  j["dst"] = r.dst ? ordered_json(*r.dst) : ordered_json(nullptr);
  if (r.counter) {
    j["counter"] = ordered_json{{"c", r.counter->counter}, {"v", r.counter->view}};
  } else {
    j["counter"] = nullptr;
  }
  j["digest"] = r.digest;
  j["note"] = r.note;
  return j.dump();
}

TraceRecord parse_json_line(const std::string& line, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + why);
  };
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  static const char* kKeys[] = {"tick", "seq", "kind", "src", "dst", "counter", "digest", "note"};
  if (!j.is_object() || j.size() != std::size(kKeys)) fail("expected 8 fields");
  for (const char* k : kKeys) {
    if (!j.contains(k)) fail(std::string("missing field ") + k);
  }
  TraceRecord r;
  try {
    r.tick = j["tick"].get<std::uint64_t>();
    r.seq = j["seq"].get<std::uint64_t>();
    r.kind = j["kind"].get<std::string>();
    if (!j["src"].is_null()) r.src = j["src"].get<std::uint32_t>();
    if (!j["dst"].is_null()) r.dst = j["dst"].get<std::uint32_t>();
    if (!j["counter"].is_null()) {
      r.counter = CounterValue{j["counter"].at("v").get<ViewNumber>(), j["counter"].at("c").get<std::uint64_t>()};
    }
    r.digest = j["digest"].get<std::string>();
    r.note = j["note"].get<std::string>();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return r;
}

void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& r : trace) out << to_json_line(r) << '\n';
}

Trace read_trace(std::istream& in) {
  Trace out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    out.push_back(parse_json_line(line, no));
  }
  return out;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path);
  return read_trace(in);
}

std::optional<std::string> note_field(const std::string& note, const std::string& key) {
  std::size_t pos = 0;
  while (pos < note.size()) {
    auto end = note.find(' ', pos);
    if (end == std::string::npos) end = note.size();
    std::string_view tok(note.data() + pos, end - pos);
    if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=') {
      return std::string(tok.substr(key.size() + 1));
    }
    pos = end + 1;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> note_u64(const std::string& note, const std::string& key) {
  auto v = note_field(note, key);
  if (!v) return std::nullopt;
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || p != v->data() + v->size()) return std::nullopt;
  return out;
}

TraceHeader parse_header(const Trace& trace) {
  if (trace.empty() || trace.front().kind != "header") throw std::runtime_error("trace has no header record");
  const auto& note = trace.front().note;
  TraceHeader h;
  auto need = [&](const char* key) {
    auto v = note_u64(note, key);
    if (!v) throw std::runtime_error(std::string("trace header lacks ") + key);
    return *v;
  };
  h.n = need("n");
  h.f = need("f");
  h.delta = need("delta");
  if (note_field(note, "gst").value_or("never") != "never") h.gst = need("gst");
  h.mode = note_field(note, "mode").value_or("basic");
  h.seed = note_u64(note, "seed").value_or(0);
  h.clients = note_u64(note, "clients").value_or(0);
  h.scenario = note_field(note, "scenario").value_or("");
  const auto corrupt = note_field(note, "corrupt").value_or("none");
  if (corrupt != "none") {
    std::stringstream ss(corrupt);
    std::string tok;
    while (std::getline(ss, tok, ',')) h.corrupt.insert(static_cast<std::uint32_t>(std::stoul(tok)));
  }
  return h;
}

}  // namespace tbft::sim

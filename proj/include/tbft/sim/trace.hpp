#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tbft/enclave/types.hpp"

namespace tbft::sim {

// One trace line. Optional fields serialize as null.
struct TraceRecord {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  std::string kind;
  std::optional<std::uint32_t> src;
  std::optional<std::uint32_t> dst;
  std::optional<CounterValue> counter;
  std::string digest;
  std::string note;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

std::string to_json_line(const TraceRecord& r);
// Throws std::runtime_error with the line number on malformed input.
TraceRecord parse_json_line(const std::string& line, std::size_t line_no = 0);

void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

// "key=value key=value" notes.
std::optional<std::string> note_field(const std::string& note, const std::string& key);
std::optional<std::uint64_t> note_u64(const std::string& note, const std::string& key);

// Run parameters recovered from a trace's header line.
struct TraceHeader {
  std::size_t n = 0;
  std::size_t f = 0;
  std::uint64_t delta = 0;
  std::optional<std::uint64_t> gst;  // unset: never
  std::set<std::uint32_t> corrupt;
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t clients = 0;
  std::string scenario;
};

// Throws std::runtime_error if the first record is not a well-formed header.
TraceHeader parse_header(const Trace& trace);

}  // namespace tbft::sim

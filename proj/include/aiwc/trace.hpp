#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aiwc/error.hpp"
#include "aiwc/kernel.hpp"

namespace aiwc {

struct WorkItemId {
  std::uint32_t x = 0, y = 0, z = 0;
  bool operator==(const WorkItemId&) const = default;
};

enum class EventKind { Op, Mem, Branch, Barrier };

inline std::string_view event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Op: return "op";
    case EventKind::Mem: return "mem";
    case EventKind::Branch: return "branch";
    case EventKind::Barrier: return "barrier";
  }
  return "?";
}

// One dynamic instruction. Unused kind-specific fields stay at their
// defaults so traces compare field for field after a round trip.
struct Event {
  WorkItemId wi;
  EventKind kind = EventKind::Op;
  Opcode opcode = Opcode::Halt;
  std::uint32_t width = 1;
  std::uint64_t address = 0;     // mem only
  std::int32_t branch_site = 0;  // branch only: static instruction index
  bool taken = false;            // branch only

  bool operator==(const Event&) const = default;
};

// Ordered event stream: events are contiguous per work-item, work-items in
// canonical linear-id order. Immutable once built.
struct Trace {
  std::vector<Event> events;
  std::uint64_t work_item_count = 0;

  bool operator==(const Trace&) const = default;
};

inline constexpr std::string_view kTraceHeader = "aiwctrace v1";

// One JSON object per line; addresses as decimal strings so 64-bit values
// survive JSON readers that parse numbers as doubles.
inline void write_trace(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  std::string line;
  for (const Event& e : trace.events) {
    line.clear();
    line += "{\"wi\":[";
    line += std::to_string(e.wi.x);
    line += ',';
    line += std::to_string(e.wi.y);
    line += ',';
    line += std::to_string(e.wi.z);
    line += "],\"kind\":\"";
    line += event_kind_name(e.kind);
    line += "\",\"op\":\"";
    line += opcode_name(e.opcode);
    line += "\",\"width\":";
    line += std::to_string(e.width);
    if (e.kind == EventKind::Mem) {
      line += ",\"addr\":\"";
      line += std::to_string(e.address);
      line += '"';
    } else if (e.kind == EventKind::Branch) {
      line += ",\"site\":";
      line += std::to_string(e.branch_site);
      line += ",\"taken\":";
      line += e.taken ? "true" : "false";
    }
    line += "}\n";
    out << line;
  }
  if (!out) throw IoError("trace write failed");
}

inline void write_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_trace(trace, out);
}

inline Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty trace file: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw ParseError("version mismatch: expected '" +
                         std::string(kTraceHeader) + "', got '" + line + "'",
                     1);

  Trace trace;
  int lineno = 1;
  bool have_prev = false;
  WorkItemId prev;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("wi") || !j.contains("kind") ||
        !j.contains("op") || !j.contains("width"))
      throw ParseError("malformed record: missing required keys", lineno);

    Event e;
    const auto& wi = j["wi"];
    if (!wi.is_array() || wi.size() != 3)
      throw ParseError("malformed record: wi must be a 3-array", lineno);
    e.wi = {wi[0].get<std::uint32_t>(), wi[1].get<std::uint32_t>(),
            wi[2].get<std::uint32_t>()};

    const std::string kind = j["kind"].get<std::string>();
    if (kind == "op") e.kind = EventKind::Op;
    else if (kind == "mem") e.kind = EventKind::Mem;
    else if (kind == "branch") e.kind = EventKind::Branch;
    else if (kind == "barrier") e.kind = EventKind::Barrier;
    else
      throw ParseError("malformed record: unknown event kind '" + kind + "'",
                       lineno);

    const std::string op = j["op"].get<std::string>();
    auto opcode = opcode_from_name(op);
    if (!opcode)
      throw ParseError("malformed record: unknown opcode '" + op + "'",
                       lineno);
    e.opcode = *opcode;
    e.width = j["width"].get<std::uint32_t>();

    if (e.kind == EventKind::Mem) {
      if (!j.contains("addr") || !j["addr"].is_string())
        throw ParseError("malformed record: mem event needs string addr",
                         lineno);
      const std::string addr = j["addr"].get<std::string>();
      char* end = nullptr;
      e.address = std::strtoull(addr.c_str(), &end, 10);
      if (end != addr.c_str() + addr.size())
        throw ParseError("malformed record: bad address '" + addr + "'",
                         lineno);
    } else if (e.kind == EventKind::Branch) {
      if (!j.contains("site") || !j.contains("taken"))
        throw ParseError("malformed record: branch event needs site and taken",
                         lineno);
      e.branch_site = j["site"].get<std::int32_t>();
      e.taken = j["taken"].get<bool>();
    }

    if (!have_prev || !(e.wi == prev)) {
      ++trace.work_item_count;
      prev = e.wi;
      have_prev = true;
    }
    trace.events.push_back(e);
  }
  return trace;
}

inline Trace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_trace(in);
}

}  // namespace aiwc

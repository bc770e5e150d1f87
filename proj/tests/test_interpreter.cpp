#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "aiwc/interpreter.hpp"
#include "aiwc/kernel.hpp"
#include "aiwc/trace.hpp"

using namespace aiwc;

namespace {

std::string samples_dir() {
  const char* env = std::getenv("AIWC_SAMPLES_DIR");
  return env ? env : "samples";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Kernel load_sample(const std::string& name) {
  return parse_kernel(slurp(samples_dir() + "/" + name));
}

}  // namespace

TEST_CASE("halt-only kernel emits one terminal event per work-item",
          "[interpreter]") {
  const Kernel k = parse_kernel("halt");
  const Trace t = execute(k, {{4, 1, 1}, {1, 1, 1}});
  CHECK(t.work_item_count == 4);
  REQUIRE(t.events.size() == 4);
  for (const Event& e : t.events) {
    CHECK(e.kind == EventKind::Op);
    CHECK(e.opcode == Opcode::Halt);
  }
}

TEST_CASE("vector_add trace shape and addresses", "[interpreter]") {
  const Kernel k = load_sample("vector_add.mk");
  const Trace t = execute(k, {{8, 1, 1}, {4, 1, 1}});
  CHECK(t.work_item_count == 8);
  REQUIRE(t.events.size() == 40);  // 8 work-items x 5 events

  std::set<std::uint64_t> loads, stores;
  for (const Event& e : t.events) {
    if (e.kind != EventKind::Mem) continue;
    if (e.opcode == Opcode::Load) loads.insert(e.address);
    if (e.opcode == Opcode::Store) stores.insert(e.address);
  }
  CHECK(loads.size() == 16);
  CHECK(stores.size() == 8);
  std::set<std::uint64_t> all = loads;
  all.insert(stores.begin(), stores.end());
  CHECK(all.size() == 24);

  // addresses are affine in gid0
  for (std::uint64_t g = 0; g < 8; ++g) {
    CHECK(loads.count(g * 8) == 1);
    CHECK(loads.count(4096 + g * 8) == 1);
    CHECK(stores.count(8192 + g * 8) == 1);
  }

  // per-work-item opcode sequence is identical for straight-line kernels
  for (std::size_t wi = 0; wi < 8; ++wi) {
    CHECK(t.events[wi * 5 + 0].opcode == Opcode::Load);
    CHECK(t.events[wi * 5 + 1].opcode == Opcode::Load);
    CHECK(t.events[wi * 5 + 2].opcode == Opcode::Add);
    CHECK(t.events[wi * 5 + 3].opcode == Opcode::Store);
    CHECK(t.events[wi * 5 + 4].opcode == Opcode::Halt);
  }
}

TEST_CASE("execution is deterministic", "[interpreter]") {
  const Kernel k = load_sample("branchy.mk");
  const NDRange nd{{16, 2, 1}, {4, 1, 1}};
  const Trace a = execute(k, nd, {{"n", 50}});
  const Trace b = execute(k, nd, {{"n", 50}});
  CHECK(a == b);
}

TEST_CASE("infinite loop exhausts fuel", "[interpreter]") {
  const Kernel k = parse_kernel(
      "loop:\n"
      "  add r0, r0, 1\n"
      "  br loop\n"
      "halt\n");
  try {
    execute(k, {{1, 1, 1}, {1, 1, 1}}, {}, 1000);
    FAIL("expected fuel exhaustion");
  } catch (const ExecutionError& e) {
    CHECK(std::string(e.what()).find("fuel") != std::string::npos);
  }
}

TEST_CASE("event count per work-item never exceeds fuel", "[interpreter]") {
  const Kernel k = load_sample("strided_sum.mk");
  for (std::uint64_t fuel : {64ull, 200ull, 100000ull}) {
    Trace t;
    try {
      t = execute(k, {{4, 1, 1}, {2, 1, 1}}, {{"n", 30}, {"stride", 4}}, fuel);
    } catch (const ExecutionError&) {
      continue;  // ran out of fuel, nothing emitted to check
    }
    std::map<std::uint32_t, std::uint64_t> per_wi;
    for (const Event& e : t.events) ++per_wi[e.wi.x];
    for (const auto& [wi, count] : per_wi) CHECK(count <= fuel);
  }
}

TEST_CASE("loop kernel executes the hand-counted instruction total",
          "[interpreter]") {
  const Kernel k = load_sample("strided_sum.mk");
  const std::uint64_t n = 10;
  const Trace t = execute(k, {{4, 1, 1}, {1, 1, 1}}, {{"n", 10}, {"stride", 4}});
  // per work-item: 3 setup + n*(6 loop body incl. branch) + store + halt
  const std::uint64_t expected_per_wi = 3 + n * 6 + 1 + 1;
  CHECK(t.events.size() == 4 * expected_per_wi);

  // independent per-work-item step counter: group sizes agree
  std::map<std::uint32_t, std::uint64_t> per_wi;
  for (const Event& e : t.events) ++per_wi[e.wi.x];
  std::uint64_t total = 0;
  for (const auto& [wi, count] : per_wi) {
    CHECK(count == expected_per_wi);
    total += count;
  }
  CHECK(total == t.events.size());
}

TEST_CASE("barrier is recorded, not synchronized", "[interpreter]") {
  const Kernel k = load_sample("barrier_phases.mk");
  const Trace t = execute(k, {{8, 1, 1}, {4, 1, 1}});
  std::uint64_t barriers = 0;
  for (const Event& e : t.events)
    if (e.kind == EventKind::Barrier) ++barriers;
  CHECK(barriers == 8 * 2);
  // work-items are contiguous: barrier events never interleave across items
  for (std::size_t i = 1; i < t.events.size(); ++i) {
    if (t.events[i].wi.x < t.events[i - 1].wi.x) FAIL("work-items interleaved");
  }
}

TEST_CASE("builtin operands map to ndrange coordinates", "[interpreter]") {
  const Kernel k = parse_kernel(
      "st [gid0 + gid1*100 + lid0*10000 + grp0*1000000], 0\n"
      "halt\n");
  const Trace t = execute(k, {{4, 2, 1}, {2, 1, 1}});
  std::set<std::uint64_t> addrs;
  for (const Event& e : t.events)
    if (e.kind == EventKind::Mem) addrs.insert(e.address);
  // gid0=3, gid1=1 -> lid0=1, grp0=1: 3 + 100 + 10000 + 1000000
  CHECK(addrs.count(1010103) == 1);
  // gid0=0, gid1=0 -> 0
  CHECK(addrs.count(0) == 1);
  CHECK(addrs.size() == 8);
}

TEST_CASE("division by zero and argument binding errors", "[interpreter]") {
  const Kernel div0 = parse_kernel("div r0, 10, 0\nhalt");
  CHECK_THROWS_AS(execute(div0, {{1, 1, 1}, {1, 1, 1}}), ExecutionError);

  const Kernel needs_n = parse_kernel(".param n\nmov r0, n\nhalt");
  CHECK_THROWS_AS(execute(needs_n, {{1, 1, 1}, {1, 1, 1}}), ExecutionError);
  CHECK_THROWS_AS(
      execute(needs_n, {{1, 1, 1}, {1, 1, 1}}, {{"n", 1}, {"typo", 2}}),
      ExecutionError);
  CHECK_NOTHROW(execute(needs_n, {{1, 1, 1}, {1, 1, 1}}, {{"n", 1}}));
}

TEST_CASE("ndrange validation", "[interpreter]") {
  const Kernel k = parse_kernel("halt");
  CHECK_THROWS_AS(execute(k, {{8, 1, 1}, {3, 1, 1}}), ExecutionError);
  CHECK_THROWS_AS(execute(k, {{0, 1, 1}, {1, 1, 1}}), ExecutionError);
}

TEST_CASE("trace file round-trip is field-for-field identical",
          "[interpreter]") {
  const Kernel k = load_sample("branchy.mk");
  const Trace t = execute(k, {{6, 1, 1}, {2, 1, 1}}, {{"n", 12}});

  std::ostringstream out;
  write_trace(t, out);
  std::istringstream in(out.str());
  const Trace back = read_trace(in);
  CHECK(back == t);

  // empty trace: header-only file
  std::ostringstream empty_out;
  write_trace(Trace{}, empty_out);
  CHECK(empty_out.str() == "aiwctrace v1\n");
  std::istringstream empty_in(empty_out.str());
  const Trace empty = read_trace(empty_in);
  CHECK(empty.events.empty());
  CHECK(empty.work_item_count == 0);
}

TEST_CASE("trace reader rejects malformed input", "[interpreter]") {
  SECTION("version mismatch") {
    std::istringstream in("aiwctrace v2\n");
    CHECK_THROWS_AS(read_trace(in), ParseError);
  }
  SECTION("unknown event kind") {
    std::istringstream in(
        "aiwctrace v1\n"
        "{\"wi\":[0,0,0],\"kind\":\"warp\",\"op\":\"add\",\"width\":1}\n");
    try {
      read_trace(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("warp") != std::string::npos);
      CHECK(e.line() == 2);
    }
  }
  SECTION("mem event without address") {
    std::istringstream in(
        "aiwctrace v1\n"
        "{\"wi\":[0,0,0],\"kind\":\"mem\",\"op\":\"load\",\"width\":1}\n");
    CHECK_THROWS_AS(read_trace(in), ParseError);
  }
  SECTION("not json") {
    std::istringstream in("aiwctrace v1\nnot json at all\n");
    CHECK_THROWS_AS(read_trace(in), ParseError);
  }
}

TEST_CASE("large addresses survive the decimal-string encoding",
          "[interpreter]") {
  Trace t;
  Event e;
  e.kind = EventKind::Mem;
  e.opcode = Opcode::Store;
  e.address = 0xfffffffffffffff5ull;  // wrapped negative offset
  t.events.push_back(e);
  t.work_item_count = 1;
  std::ostringstream out;
  write_trace(t, out);
  std::istringstream in(out.str());
  CHECK(read_trace(in) == t);
}

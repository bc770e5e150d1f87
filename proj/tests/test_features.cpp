#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "aiwc/features.hpp"
#include "aiwc/interpreter.hpp"
#include "aiwc/kernel.hpp"
#include "aiwc/rng.hpp"
#include "aiwc/synth.hpp"

using namespace aiwc;

namespace {

std::string samples_dir() {
  const char* env = std::getenv("AIWC_SAMPLES_DIR");
  return env ? env : "samples";
}

Kernel load_sample(const std::string& name) {
  std::ifstream in(samples_dir() + "/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kernel(ss.str());
}

Event op_event(std::uint32_t wi, Opcode op, std::uint32_t width = 1) {
  Event e;
  e.wi = {wi, 0, 0};
  e.kind = EventKind::Op;
  e.opcode = op;
  e.width = width;
  return e;
}

Event mem_event(std::uint32_t wi, std::uint64_t addr) {
  Event e;
  e.wi = {wi, 0, 0};
  e.kind = EventKind::Mem;
  e.opcode = Opcode::Load;
  e.address = addr;
  return e;
}

Event branch_event(std::uint32_t wi, std::int32_t site, bool taken) {
  Event e;
  e.wi = {wi, 0, 0};
  e.kind = EventKind::Branch;
  e.opcode = Opcode::Branch;
  e.branch_site = site;
  e.taken = taken;
  return e;
}

Event barrier_event(std::uint32_t wi) {
  Event e;
  e.wi = {wi, 0, 0};
  e.kind = EventKind::Barrier;
  e.opcode = Opcode::Barrier;
  return e;
}

// a synthetic per-work-item block: n ops, then optional barrier blocks
void append_block(Trace& t, std::uint32_t wi,
                  const std::vector<std::uint64_t>& segments) {
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (s) t.events.push_back(barrier_event(wi));
    for (std::uint64_t i = 0; i < segments[s]; ++i)
      t.events.push_back(op_event(wi, Opcode::Add));
  }
  t.events.push_back(op_event(wi, Opcode::Halt));
}

// deterministic random trace used by the fuzz suites
Trace random_trace(Rng& rng) {
  Trace t;
  const std::uint32_t items = 1 + static_cast<std::uint32_t>(rng.bounded(std::uint64_t{6}));
  t.work_item_count = items;
  const std::uint64_t base = rng.bounded(std::uint64_t{1} << 40);
  for (std::uint32_t wi = 0; wi < items; ++wi) {
    const std::uint64_t n = 1 + rng.bounded(std::uint64_t{120});
    std::uint32_t ghr_sites = 1 + static_cast<std::uint32_t>(rng.bounded(std::uint64_t{4}));
    for (std::uint64_t i = 0; i < n; ++i) {
      switch (rng.bounded(std::uint64_t{10})) {
        case 0:
          t.events.push_back(barrier_event(wi));
          break;
        case 1:
        case 2:
          t.events.push_back(branch_event(
              wi, static_cast<std::int32_t>(rng.bounded(std::uint64_t{ghr_sites})),
              rng.uniform() < 0.5));
          break;
        case 3:
        case 4:
        case 5: {
          // mixture of strided and random addresses
          const std::uint64_t addr =
              rng.uniform() < 0.7 ? base + 8 * rng.bounded(std::uint64_t{64})
                                  : rng.next_u64() >> 20;
          t.events.push_back(mem_event(wi, addr));
          break;
        }
        default:
          t.events.push_back(op_event(
              wi, rng.uniform() < 0.5 ? Opcode::Add : Opcode::Mul,
              1u << rng.bounded(std::uint64_t{5})));
      }
    }
    t.events.push_back(op_event(wi, Opcode::Halt));
  }
  return t;
}

}  // namespace

TEST_CASE("vector_add features match the hand-simulated trace", "[features]") {
  const Trace t = execute(load_sample("vector_add.mk"), {{8, 1, 1}, {4, 1, 1}});
  const FeatureVector f = characterize(t);
  CHECK(f.work_items == 8);
  CHECK(f.total_instruction_count == 40);
  CHECK(f.total_memory_footprint == 24);
  CHECK(f.total_barriers_hit == 0);
  // 24 distinct addresses touched once each: entropy is exactly log2(24)
  CHECK(f.global_memory_address_entropy == std::log2(24.0));
  CHECK(f.ninety_memory_footprint == 22);
  // opcode histogram: load 16, add/store/halt 8 each
  CHECK(f.opcode_diversity_90 == 4);
  // SIMD stats cover the adds only
  CHECK(f.max_simd_width == 1);
  CHECK(f.mean_simd_width == 1);
  CHECK(f.sd_simd_width == 0);
  // one 4-instruction segment per work-item
  CHECK(f.min_itb == 4);
  CHECK(f.max_itb == 4);
  CHECK(f.median_itb == 4);
  // no branches
  CHECK(f.total_unique_branch_instructions == 0);
  CHECK(f.yokota_branch_entropy == 0);
  CHECK(f.average_linear_branch_entropy == 0);
}

TEST_CASE("single wide op dominates the SIMD statistics", "[features]") {
  Trace t;
  t.work_item_count = 1;
  t.events.push_back(op_event(0, Opcode::Add, 8));
  t.events.push_back(op_event(0, Opcode::Halt));
  const FeatureVector f = characterize(t);
  CHECK(f.work_items == 1);
  CHECK(f.max_simd_width == 8);
  CHECK(f.mean_simd_width == 8);
  CHECK(f.sd_simd_width == 0);
  CHECK(f.total_instruction_count == 2);
}

TEST_CASE("itb worked examples", "[features]") {
  SECTION("10 instr, barrier, 20 instr") {
    Trace t;
    t.work_item_count = 1;
    append_block(t, 0, {10, 20});
    const ItbStats s = itb_stats(t);
    CHECK(s.min == 10);
    CHECK(s.max == 20);
    CHECK(s.median == 15);
    CHECK(s.total_barriers == 1);
  }
  SECTION("no barriers: min = max = median = k") {
    Trace t;
    t.work_item_count = 1;
    append_block(t, 0, {7});
    const ItbStats s = itb_stats(t);
    CHECK(s.min == 7);
    CHECK(s.max == 7);
    CHECK(s.median == 7);
    CHECK(s.total_barriers == 0);
  }
  SECTION("two identical work-items pool their segments") {
    Trace t;
    t.work_item_count = 2;
    append_block(t, 0, {10, 20});
    append_block(t, 1, {10, 20});
    const ItbStats s = itb_stats(t);
    CHECK(s.median == 15);
    CHECK(s.total_barriers == 2);
  }
  SECTION("median of an even pooled multiset may be half-integer") {
    Trace t;
    t.work_item_count = 1;
    append_block(t, 0, {3, 4});
    CHECK(itb_stats(t).median == 3.5);
  }
}

TEST_CASE("branch entropy formulas at fixed pattern statistics", "[features]") {
  std::map<std::uint32_t, PatternStats> patterns;
  patterns[0] = {100, 50};  // single pattern, p = 0.5
  auto [yokota, linear] = entropies_from_patterns(patterns);
  CHECK_THAT(yokota, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(linear, Catch::Matchers::WithinAbs(1.0, 1e-12));

  patterns.clear();
  patterns[1] = {40, 40};  // always taken
  patterns[2] = {60, 0};   // never taken
  auto [y2, l2] = entropies_from_patterns(patterns);
  CHECK(y2 == 0.0);
  CHECK(l2 == 0.0);

  patterns.clear();
  patterns[0] = {80, 20};  // p = 0.25 with weight 1
  auto [y3, l3] = entropies_from_patterns(patterns);
  CHECK_THAT(y3, Catch::Matchers::WithinAbs(0.8112781244591328, 1e-12));
  CHECK_THAT(l3, Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("always-taken branches have zero entropy", "[features]") {
  Trace t;
  t.work_item_count = 1;
  for (int i = 0; i < 200; ++i) t.events.push_back(branch_event(0, 3, true));
  t.events.push_back(op_event(0, Opcode::Halt));
  const BranchEntropies b = branch_entropies(t, 8);
  CHECK(b.yokota == 0.0);
  CHECK(b.average_linear == 0.0);
  CHECK(b.unique_sites == 1);
  CHECK(b.sites_90 == 1);
}

TEST_CASE("alternating branch stream becomes predictable", "[features]") {
  for (unsigned history : {1u, 4u, 8u}) {
    Trace t;
    t.work_item_count = 1;
    for (int i = 0; i < 1000; ++i)
      t.events.push_back(branch_event(0, 0, i % 2 == 0));
    t.events.push_back(op_event(0, Opcode::Halt));
    const BranchEntropies b = branch_entropies(t, history);
    CHECK(b.yokota < 0.05);
    CHECK(b.average_linear < 0.05);
  }
}

TEST_CASE("zero-branch trace yields all-zero control features", "[features]") {
  Trace t;
  t.work_item_count = 1;
  append_block(t, 0, {5});
  const FeatureVector f = characterize(t);
  CHECK(f.total_unique_branch_instructions == 0);
  CHECK(f.ninety_branch_instructions == 0);
  CHECK(f.yokota_branch_entropy == 0);
  CHECK(f.average_linear_branch_entropy == 0);
}

TEST_CASE("local entropy worked examples", "[features]") {
  Histogram<std::uint64_t> addrs;
  for (std::uint64_t a : {0, 1, 2, 3}) addrs.add(a);
  CHECK(local_entropy(addrs, 1) == 1.0);
  CHECK(local_entropy(addrs, 2) == 0.0);
  CHECK_THROWS_AS(local_entropy(addrs, 0), ExecutionError);
  CHECK_THROWS_AS(local_entropy(addrs, 11), ExecutionError);
}

TEST_CASE("characterize rejects empty traces and bad history", "[features]") {
  CHECK_THROWS_AS(characterize(Trace{}), ExecutionError);
  Trace t;
  t.work_item_count = 1;
  append_block(t, 0, {1});
  CHECK_THROWS_AS(characterize(t, 0), ExecutionError);
  CHECK_THROWS_AS(characterize(t, 25), ExecutionError);
  CHECK_NOTHROW(characterize(t, 24));
}

TEST_CASE("gmae equals log2(unique) when all accesses are distinct",
          "[features]") {
  Rng rng(99);
  Trace t;
  t.work_item_count = 1;
  std::set<std::uint64_t> used;
  while (used.size() < 100) {
    const std::uint64_t a = rng.next_u64();
    if (used.insert(a).second) t.events.push_back(mem_event(0, a));
  }
  t.events.push_back(op_event(0, Opcode::Halt));
  const FeatureVector f = characterize(t);
  CHECK(f.total_memory_footprint == 100);
  CHECK_THAT(f.global_memory_address_entropy,
             Catch::Matchers::WithinAbs(std::log2(100.0), 1e-12));
}

TEST_CASE("uniform width w gives mean = max = w, sd = 0", "[features]") {
  for (std::uint32_t w : {1u, 4u, 16u}) {
    Trace t;
    t.work_item_count = 2;
    for (std::uint32_t wi = 0; wi < 2; ++wi) {
      for (int i = 0; i < 20; ++i)
        t.events.push_back(op_event(wi, Opcode::Mul, w));
      t.events.push_back(op_event(wi, Opcode::Halt));
    }
    const FeatureVector f = characterize(t);
    CHECK(f.max_simd_width == w);
    CHECK(f.mean_simd_width == w);
    CHECK(f.sd_simd_width == 0);
  }
}

TEST_CASE("characterize is invariant under work-item block permutation",
          "[features]") {
  Rng rng(777);
  for (int trial = 0; trial < 20; ++trial) {
    const Trace t = random_trace(rng);

    // split into blocks, reverse their order, reassemble
    std::vector<std::vector<Event>> blocks;
    for (const Event& e : t.events) {
      if (blocks.empty() || !(blocks.back().back().wi == e.wi))
        blocks.emplace_back();
      blocks.back().push_back(e);
    }
    Trace shuffled;
    shuffled.work_item_count = t.work_item_count;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
      shuffled.events.insert(shuffled.events.end(), it->begin(), it->end());

    const FeatureVector a = characterize(t);
    const FeatureVector b = characterize(shuffled);
    CHECK(a == b);  // bit-exact, not approximate
  }
}

TEST_CASE("fuzzed traces satisfy every feature invariant", "[features]") {
  Rng rng(123456);
  for (int trial = 0; trial < 500; ++trial) {
    const Trace t = random_trace(rng);
    const FeatureVector f = characterize(t);
    const std::string violation = feature_invariant_violation(f);
    if (!violation.empty()) {
      CAPTURE(trial, violation);
      FAIL("invariant violated");
    }
  }
}

TEST_CASE("feature csv schema", "[features]") {
  const std::string header = feature_csv_header();
  CHECK(header.rfind("application,kernel,size,opcode_diversity_90,", 0) == 0);
  CHECK(header.find("local_memory_address_entropy_10") != std::string::npos);
  CHECK(header.find("average_linear_branch_entropy") != std::string::npos);

  FeatureVector f;
  f.global_memory_address_entropy = 0.12345678912345;
  const std::string row = feature_csv_row("app", "kern", "tiny", f);
  CHECK(row.find("0.123456789") != std::string::npos);    // 9 significant digits
  CHECK(row.find("0.1234567891") == std::string::npos);

  // round-trip through array form
  const auto arr = f.to_array();
  CHECK(FeatureVector::from_array(arr) == f);
  CHECK(arr.size() == kFeatureCount);
}

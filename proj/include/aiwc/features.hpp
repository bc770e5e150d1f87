#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aiwc/csv.hpp"
#include "aiwc/error.hpp"
#include "aiwc/histogram.hpp"
#include "aiwc/trace.hpp"

namespace aiwc {

inline constexpr std::size_t kLocalEntropyLevels = 10;
inline constexpr std::size_t kFeatureCount = 27;  // schema constant
inline constexpr unsigned kDefaultBranchHistory = 8;
inline constexpr unsigned kMaxBranchHistory = 24;

// The architecture-independent feature vector, fixed order. Compute,
// parallelism, memory and control families; local memory address entropy is
// expanded into ten skip-bit resolutions.
struct FeatureVector {
  double opcode_diversity_90 = 0;      // 1
  double total_instruction_count = 0;  // 2
  double work_items = 0;               // 3
  double total_barriers_hit = 0;       // 4
  double min_itb = 0;                  // 5
  double max_itb = 0;                  // 6
  double median_itb = 0;               // 7  (may be half-integer)
  double max_simd_width = 0;           // 8
  double mean_simd_width = 0;          // 9
  double sd_simd_width = 0;            // 10
  double total_memory_footprint = 0;   // 11
  double ninety_memory_footprint = 0;  // 12
  double global_memory_address_entropy = 0;                  // 13
  std::array<double, kLocalEntropyLevels> local_memory_address_entropy{};
                                                             // 14..23
  double total_unique_branch_instructions = 0;  // 24
  double ninety_branch_instructions = 0;        // 25
  double yokota_branch_entropy = 0;             // 26
  double average_linear_branch_entropy = 0;     // 27

  bool operator==(const FeatureVector&) const = default;

  std::array<double, kFeatureCount> to_array() const {
    std::array<double, kFeatureCount> a{};
    a[0] = opcode_diversity_90;
    a[1] = total_instruction_count;
    a[2] = work_items;
    a[3] = total_barriers_hit;
    a[4] = min_itb;
    a[5] = max_itb;
    a[6] = median_itb;
    a[7] = max_simd_width;
    a[8] = mean_simd_width;
    a[9] = sd_simd_width;
    a[10] = total_memory_footprint;
    a[11] = ninety_memory_footprint;
    a[12] = global_memory_address_entropy;
    for (std::size_t i = 0; i < kLocalEntropyLevels; ++i)
      a[13 + i] = local_memory_address_entropy[i];
    a[23] = total_unique_branch_instructions;
    a[24] = ninety_branch_instructions;
    a[25] = yokota_branch_entropy;
    a[26] = average_linear_branch_entropy;
    return a;
  }

  static FeatureVector from_array(const std::array<double, kFeatureCount>& a) {
    FeatureVector f;
    f.opcode_diversity_90 = a[0];
    f.total_instruction_count = a[1];
    f.work_items = a[2];
    f.total_barriers_hit = a[3];
    f.min_itb = a[4];
    f.max_itb = a[5];
    f.median_itb = a[6];
    f.max_simd_width = a[7];
    f.mean_simd_width = a[8];
    f.sd_simd_width = a[9];
    f.total_memory_footprint = a[10];
    f.ninety_memory_footprint = a[11];
    f.global_memory_address_entropy = a[12];
    for (std::size_t i = 0; i < kLocalEntropyLevels; ++i)
      f.local_memory_address_entropy[i] = a[13 + i];
    f.total_unique_branch_instructions = a[23];
    f.ninety_branch_instructions = a[24];
    f.yokota_branch_entropy = a[25];
    f.average_linear_branch_entropy = a[26];
    return f;
  }

  static const std::array<std::string, kFeatureCount>& names() {
    static const std::array<std::string, kFeatureCount> kNames = [] {
      std::array<std::string, kFeatureCount> n;
      n[0] = "opcode_diversity_90";
      n[1] = "total_instruction_count";
      n[2] = "work_items";
      n[3] = "total_barriers_hit";
      n[4] = "min_itb";
      n[5] = "max_itb";
      n[6] = "median_itb";
      n[7] = "max_simd_width";
      n[8] = "mean_simd_width";
      n[9] = "sd_simd_width";
      n[10] = "total_memory_footprint";
      n[11] = "ninety_memory_footprint";
      n[12] = "global_memory_address_entropy";
      for (std::size_t i = 0; i < kLocalEntropyLevels; ++i)
        n[13 + i] = "local_memory_address_entropy_" + std::to_string(i + 1);
      n[23] = "total_unique_branch_instructions";
      n[24] = "ninety_branch_instructions";
      n[25] = "yokota_branch_entropy";
      n[26] = "average_linear_branch_entropy";
      return n;
    }();
    return kNames;
  }
};

struct ItbStats {
  double min = 0;
  double max = 0;
  double median = 0;
  std::uint64_t total_barriers = 0;
};

// median of a multiset; an even count averages the two middle values
inline double median_of(std::vector<std::uint64_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) +
          static_cast<double>(values[n / 2])) /
         2.0;
}

namespace detail {

// True for events that count as "instructions" in barrier segments: the
// barrier itself and the terminal halt marker are excluded.
inline bool counts_toward_itb(const Event& e) {
  return e.kind != EventKind::Barrier && e.opcode != Opcode::Halt;
}

}  // namespace detail

// Per work-item, the instruction stream is split at barriers; segment length
// counts the instructions inside (the final barrier-to-end segment included).
// Statistics pool segment lengths across all work-items.
inline ItbStats itb_stats(const Trace& trace) {
  std::vector<std::uint64_t> segments;
  ItbStats stats;
  std::uint64_t current = 0;
  bool in_block = false;
  WorkItemId wi;
  auto close_block = [&] { segments.push_back(current); current = 0; };
  for (const Event& e : trace.events) {
    if (!in_block || !(e.wi == wi)) {
      if (in_block) close_block();
      wi = e.wi;
      in_block = true;
    }
    if (e.kind == EventKind::Barrier) {
      ++stats.total_barriers;
      close_block();
    } else if (detail::counts_toward_itb(e)) {
      ++current;
    }
  }
  if (in_block) close_block();
  if (segments.empty()) return stats;
  stats.min = static_cast<double>(
      *std::min_element(segments.begin(), segments.end()));
  stats.max = static_cast<double>(
      *std::max_element(segments.begin(), segments.end()));
  stats.median = median_of(std::move(segments));
  return stats;
}

struct PatternStats {
  std::uint64_t occurrences = 0;
  std::uint64_t taken = 0;
};

// Weighted binary entropies over pooled (history pattern -> outcome) stats:
//   yokota  = sum_h w_h * ( -p_h log2 p_h - (1-p_h) log2 (1-p_h) )
//   linear  = sum_h w_h * 2 * min(p_h, 1 - p_h)
// with w_h = occurrences_h / total and 0 log2 0 := 0.
inline std::pair<double, double> entropies_from_patterns(
    const std::map<std::uint32_t, PatternStats>& patterns) {
  std::uint64_t total = 0;
  for (const auto& [pattern, st] : patterns) total += st.occurrences;
  if (total == 0) return {0.0, 0.0};
  double yokota = 0.0;
  double linear = 0.0;
  for (const auto& [pattern, st] : patterns) {
    const double w =
        static_cast<double>(st.occurrences) / static_cast<double>(total);
    const double p =
        static_cast<double>(st.taken) / static_cast<double>(st.occurrences);
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    yokota += w * h;
    linear += w * 2.0 * std::min(p, 1.0 - p);
  }
  return {yokota, linear};
}

struct BranchEntropies {
  double yokota = 0;
  double average_linear = 0;
  std::uint64_t unique_sites = 0;
  std::uint64_t sites_90 = 0;
};

// Each work-item carries a global-history register of the last
// history_length outcomes, initialized to all zeros. Pattern statistics are
// pooled across work-items before the entropy reduction.
inline BranchEntropies branch_entropies(const Trace& trace,
                                        unsigned history_length) {
  if (history_length < 1 || history_length > kMaxBranchHistory)
    throw ExecutionError("branch history length must be in [1, " +
                         std::to_string(kMaxBranchHistory) + "]");
  const std::uint32_t mask =
      history_length >= 32 ? 0xffffffffu : ((1u << history_length) - 1u);

  std::map<std::uint32_t, PatternStats> patterns;
  Histogram<std::int32_t> sites;
  std::uint32_t ghr = 0;
  bool in_block = false;
  WorkItemId wi;
  for (const Event& e : trace.events) {
    if (!in_block || !(e.wi == wi)) {
      wi = e.wi;
      in_block = true;
      ghr = 0;
    }
    if (e.kind != EventKind::Branch) continue;
    PatternStats& st = patterns[ghr];
    ++st.occurrences;
    if (e.taken) ++st.taken;
    sites.add(e.branch_site);
    ghr = ((ghr << 1) | (e.taken ? 1u : 0u)) & mask;
  }

  BranchEntropies out;
  if (sites.empty()) return out;
  auto [yokota, linear] = entropies_from_patterns(patterns);
  out.yokota = yokota;
  out.average_linear = linear;
  out.unique_sites = sites.unique();
  out.sites_90 = coverage_90(sites);
  return out;
}

// Entropy of the address histogram after discarding skip_bits low-order
// bits; the spatial-locality measure, one value per resolution.
inline double local_entropy(const Histogram<std::uint64_t>& addresses,
                            unsigned skip_bits) {
  if (skip_bits < 1 || skip_bits > kLocalEntropyLevels)
    throw ExecutionError("skip_bits must be in [1, 10]");
  Histogram<std::uint64_t> coarse;
  for (const auto& [addr, count] : addresses.counts())
    coarse.add(addr >> skip_bits, count);
  return shannon_entropy(coarse);
}

// Computes the full 27-feature vector from a trace. Pure; pools per-work-item
// statistics, so the result is invariant under permutation of work-item
// blocks.
inline FeatureVector characterize(const Trace& trace,
                                  unsigned history_length = kDefaultBranchHistory) {
  if (trace.events.empty())
    throw ExecutionError(
        "empty trace: a kernel with no executed instructions is not "
        "characterizable");

  Histogram<std::string> opcodes;
  Histogram<std::uint64_t> addresses;
  Histogram<std::uint32_t> widths;  // op events only, halt excluded
  for (const Event& e : trace.events) {
    opcodes.add(std::string(opcode_name(e.opcode)));
    if (e.kind == EventKind::Mem) addresses.add(e.address);
    if (e.kind == EventKind::Op && e.opcode != Opcode::Halt)
      widths.add(e.width);
  }

  FeatureVector f;
  f.opcode_diversity_90 = static_cast<double>(coverage_90(opcodes));
  f.total_instruction_count = static_cast<double>(trace.events.size());
  f.work_items = static_cast<double>(trace.work_item_count);

  const ItbStats itb = itb_stats(trace);
  f.total_barriers_hit = static_cast<double>(itb.total_barriers);
  f.min_itb = itb.min;
  f.max_itb = itb.max;
  f.median_itb = itb.median;

  if (!widths.empty()) {
    const double n = static_cast<double>(widths.total());
    double sum = 0.0, max_w = 0.0;
    for (const auto& [w, count] : widths.by_key()) {
      sum += static_cast<double>(w) * static_cast<double>(count);
      max_w = std::max(max_w, static_cast<double>(w));
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& [w, count] : widths.by_key()) {
      const double d = static_cast<double>(w) - mean;
      ss += d * d * static_cast<double>(count);
    }
    f.max_simd_width = max_w;
    f.mean_simd_width = mean;
    f.sd_simd_width = std::sqrt(ss / n);
  }

  f.total_memory_footprint = static_cast<double>(addresses.unique());
  f.ninety_memory_footprint = static_cast<double>(coverage_90(addresses));
  f.global_memory_address_entropy = shannon_entropy(addresses);
  for (unsigned skip = 1; skip <= kLocalEntropyLevels; ++skip)
    f.local_memory_address_entropy[skip - 1] = local_entropy(addresses, skip);

  const BranchEntropies be = branch_entropies(trace, history_length);
  f.total_unique_branch_instructions = static_cast<double>(be.unique_sites);
  f.ninety_branch_instructions = static_cast<double>(be.sites_90);
  f.yokota_branch_entropy = be.yokota;
  f.average_linear_branch_entropy = be.average_linear;
  return f;
}

// ---- feature CSV (application,kernel,size + the 27 canonical columns) ----

inline std::string feature_csv_header() {
  std::string h = "application,kernel,size";
  for (const std::string& name : FeatureVector::names()) {
    h += ',';
    h += name;
  }
  return h;
}

inline std::string feature_csv_row(const std::string& application,
                                   const std::string& kernel,
                                   const std::string& size,
                                   const FeatureVector& features) {
  std::string row = application + "," + kernel + "," + size;
  for (double v : features.to_array()) {
    row += ',';
    row += fmt9(v);
  }
  return row;
}

}  // namespace aiwc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace aiwc {

// Item -> count map used for opcode, memory-address and branch-site
// statistics. Accumulation is unordered; every consumer below reduces in a
// sorted order so results are reproducible bit for bit.
template <typename Key>
class Histogram {
 public:
  void add(const Key& key, std::uint64_t n = 1) {
    counts_[key] += n;
    total_ += n;
  }

  std::uint64_t total() const { return total_; }
  std::size_t unique() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  const std::unordered_map<Key, std::uint64_t>& counts() const {
    return counts_;
  }

  // pairs sorted by key, ascending
  std::vector<std::pair<Key, std::uint64_t>> by_key() const {
    std::vector<std::pair<Key, std::uint64_t>> v(counts_.begin(),
                                                 counts_.end());
    std::sort(v.begin(), v.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  }

  // pairs sorted by count descending, ties by key ascending
  std::vector<std::pair<Key, std::uint64_t>> by_frequency() const {
    auto v = by_key();
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return a.second > b.second;
    });
    return v;
  }

 private:
  std::unordered_map<Key, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Smallest n such that the n most frequent items account for >= 90% of the
// total. Ties in frequency break by ascending key. The comparison is done in
// integers (10*cum >= 9*total) to keep boundary cases exact.
template <typename Key>
std::uint64_t coverage_90(const Histogram<Key>& hist) {
  if (hist.empty()) return 0;
  const std::uint64_t total = hist.total();
  std::uint64_t cumulative = 0;
  std::uint64_t taken = 0;
  for (const auto& [key, count] : hist.by_frequency()) {
    cumulative += count;
    ++taken;
    if (10 * cumulative >= 9 * total) return taken;
  }
  return taken;
}

// H = -sum p * log2 p over the observed distribution; empty histogram -> 0.
template <typename Key>
double shannon_entropy(const Histogram<Key>& hist) {
  if (hist.empty()) return 0.0;
  const double total = static_cast<double>(hist.total());
  double h = 0.0;
  for (const auto& [key, count] : hist.by_key()) {
    const double p = static_cast<double>(count) / total;
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

}  // namespace aiwc

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "aiwc/histogram.hpp"
#include "aiwc/rng.hpp"

using namespace aiwc;

namespace {

// brute-force reference: long-double accumulation over the expanded
// distribution, independent of the Histogram reduction path
long double entropy_oracle(const std::vector<std::uint64_t>& counts) {
  long double total = 0;
  for (auto c : counts) total += static_cast<long double>(c);
  if (total == 0) return 0;
  long double h = 0;
  for (auto c : counts) {
    if (!c) continue;
    const long double p = static_cast<long double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

// smallest n covering >= 90% by exhaustive scan over all prefix subsets
std::uint64_t coverage_oracle(std::vector<std::uint64_t> counts) {
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::uint64_t cum = 0, n = 0;
  for (auto c : counts) {
    cum += c;
    ++n;
    if (10 * cum >= 9 * total) return n;
  }
  return n;
}

}  // namespace

TEST_CASE("coverage_90 worked examples", "[histogram]") {
  Histogram<std::string> h;
  h.add("add", 80);
  h.add("mul", 15);
  h.add("div", 5);
  CHECK(coverage_90(h) == 2);

  Histogram<std::string> single;
  single.add("x");
  CHECK(coverage_90(single) == 1);

  Histogram<std::string> ten;
  for (char c = 'a'; c <= 'j'; ++c) ten.add(std::string(1, c));
  CHECK(coverage_90(ten) == 9);

  Histogram<std::string> empty;
  CHECK(coverage_90(empty) == 0);
}

TEST_CASE("coverage_90 tie-break is by ascending key", "[histogram]") {
  // two items tie at the boundary; the result count is the same either way,
  // but the by_frequency order the count is derived from must be stable
  Histogram<std::string> h;
  h.add("zeta", 5);
  h.add("alpha", 5);
  h.add("mid", 90);
  auto order = h.by_frequency();
  REQUIRE(order.size() == 3);
  CHECK(order[0].first == "mid");
  CHECK(order[1].first == "alpha");
  CHECK(order[2].first == "zeta");
  CHECK(coverage_90(h) == 2);
}

TEST_CASE("coverage_90 minimality vs exhaustive search", "[histogram]") {
  // all histograms with up to 8 items and counts 1..5: the result n must
  // cover >= 90% while n-1 covers < 90%
  for (int items = 1; items <= 8; ++items) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(items), 1);
    for (;;) {
      Histogram<int> h;
      for (int i = 0; i < items; ++i) h.add(i, counts[static_cast<std::size_t>(i)]);
      const std::uint64_t got = coverage_90(h);
      REQUIRE(got == coverage_oracle(counts));

      // minimality direct check
      auto sorted = h.by_frequency();
      std::uint64_t total = h.total(), cum = 0;
      for (std::uint64_t i = 0; i < got; ++i) cum += sorted[i].second;
      CHECK(10 * cum >= 9 * total);
      if (got > 1) {
        cum -= sorted[got - 1].second;
        CHECK(10 * cum < 9 * total);
      }

      // next count vector
      int pos = items - 1;
      while (pos >= 0 && counts[static_cast<std::size_t>(pos)] == 5) {
        counts[static_cast<std::size_t>(pos)] = 1;
        --pos;
      }
      if (pos < 0) break;
      ++counts[static_cast<std::size_t>(pos)];
    }
  }
}

TEST_CASE("shannon entropy worked examples", "[histogram]") {
  Histogram<std::uint64_t> uniform8;
  for (std::uint64_t a = 0; a < 8; ++a) uniform8.add(a);
  CHECK(shannon_entropy(uniform8) == 3.0);

  Histogram<std::uint64_t> degenerate;
  degenerate.add(42, 100);
  CHECK(shannon_entropy(degenerate) == 0.0);

  Histogram<std::string> skew;
  skew.add("a", 1);
  skew.add("b", 3);
  CHECK_THAT(shannon_entropy(skew),
             Catch::Matchers::WithinAbs(0.8112781244591328, 1e-12));

  Histogram<int> empty;
  CHECK(shannon_entropy(empty) == 0.0);
}

TEST_CASE("entropy matches brute-force oracle on random histograms",
          "[histogram]") {
  Rng rng(20240809);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t items = 1 + rng.bounded(std::uint64_t{200});
    Histogram<std::uint64_t> h;
    std::vector<std::uint64_t> counts;
    for (std::size_t i = 0; i < items; ++i) {
      const std::uint64_t c = 1 + rng.bounded(std::uint64_t{1000});
      h.add(rng.next_u64(), c);
      counts.push_back(c);
    }
    const double got = shannon_entropy(h);
    const double want = static_cast<double>(entropy_oracle(counts));
    REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-12));
  }
}

TEST_CASE("entropy of n distinct uniform items is exactly log2 n",
          "[histogram]") {
  for (std::uint64_t n = 1; n <= 1024; n *= 2) {
    Histogram<std::uint64_t> h;
    for (std::uint64_t a = 0; a < n; ++a) h.add(a * 977 + 11);
    CHECK(shannon_entropy(h) == std::log2(static_cast<double>(n)));
  }
}

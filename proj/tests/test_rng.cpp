#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "alignkit/rng.hpp"

using namespace alignkit;

TEST_CASE("equal seeds replay the exact same stream") {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(8);
  Rng d(7);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (c.next_u64() != d.next_u64());
  CHECK(any_diff);
}

TEST_CASE("below stays in range and covers small supports") {
  Rng rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(5);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("unit is in [0,1) with reasonable spread") {
  Rng rng(2);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.unit();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    sum += v;
  }
  CHECK(std::abs(sum / 10000 - 0.5) < 0.02);
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(3);
  double sum = 0;
  double sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sample_indices draws without replacement") {
  Rng rng(4);
  const auto picks = rng.sample_indices(50, 20);
  REQUIRE(picks.size() == 20);
  std::set<std::size_t> uniq(picks.begin(), picks.end());
  CHECK(uniq.size() == 20);
  for (auto i : picks) CHECK(i < 50);

  const auto all = rng.sample_indices(10, 10);
  std::set<std::size_t> full(all.begin(), all.end());
  CHECK(full.size() == 10);

  CHECK(rng.sample_indices(5, 0).empty());
}

TEST_CASE("uniform_int covers both endpoints") {
  Rng rng(5);
  std::set<int> seen;
  for (int i = 0; i < 500; ++i) {
    const int v = rng.uniform_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("shuffle permutes in place") {
  Rng rng(6);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto sorted = v;
  rng.shuffle(v);
  CHECK(v.size() == 8);
  auto resorted = v;
  std::sort(resorted.begin(), resorted.end());
  CHECK(resorted == sorted);
}

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <numeric>
#include <set>

#include "alignkit/mock_backend.hpp"
#include "alignkit/responsesynth.hpp"
#include "alignkit/rng.hpp"
#include "test_util.hpp"

using namespace alignkit;
using testutil::TempDir;

TEST_CASE("proportional allocation lands on exact pinned splits") {
  CHECK(allocate(200, {1, 1, 1}) == std::vector<int>{67, 67, 66});
  CHECK(allocate(7, {1, 1, 1}) == std::vector<int>{3, 2, 2});
  CHECK(allocate(7, {1, 1}) == std::vector<int>{4, 3});
  CHECK(allocate(6, {1, 1, 1}) == std::vector<int>{2, 2, 2});
  CHECK(allocate(0, {1, 1}) == std::vector<int>{0, 0});
  CHECK(allocate(10, {3, 1}) == std::vector<int>{8, 2});
  CHECK(allocate(5, {0, 1}) == std::vector<int>{0, 5});
}

TEST_CASE("allocation preserves the total and caps equal-ratio spread at one") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const int members = 1 + static_cast<int>(rng.below(6));
    const int total = static_cast<int>(rng.below(500));
    const auto counts = allocate(total, std::vector<double>(members, 1.0));
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == total);
    const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*mx - *mn <= 1);
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i - 1] >= counts[i]);
  }
}

TEST_CASE("allocation preserves totals for uneven ratios too") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const int members = 1 + static_cast<int>(rng.below(5));
    std::vector<double> ratios(members);
    for (auto& r : ratios) r = rng.unit() + 0.01;
    const int total = static_cast<int>(rng.below(300));
    const auto counts = allocate(total, ratios);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == total);
    for (int c : counts) CHECK(c >= 0);
  }
}

TEST_CASE("allocation rejects degenerate inputs") {
  CHECK_THROWS_AS(allocate(5, {}), DataError);
  CHECK_THROWS_AS(allocate(5, {1.0, -0.5}), DataError);
  CHECK_THROWS_AS(allocate(5, {0.0, 0.0}), DataError);
  CHECK_THROWS_AS(allocate(-1, {1.0}), DataError);
}

TEST_CASE("each round samples from the expected checkpoint set") {
  TempDir tmp;
  const auto run = RunDir::init(tmp.path / "run");
  auto reg = CheckpointRegistry::load(run);

  CHECK_THROWS_AS(round_checkpoint_set(reg, 2), DataError);

  reg.add(CheckpointRef{"base", CheckpointKind::base, {}, {}, {}});
  reg.add(CheckpointRef{"s1", CheckpointKind::sft_seed, 1, {}, "base"});
  CHECK_THROWS_AS(round_checkpoint_set(reg, 2), DataError);

  reg.add(CheckpointRef{"s2", CheckpointKind::sft_seed, 2, {}, "base"});
  auto set2 = round_checkpoint_set(reg, 2);
  REQUIRE(set2.size() == 2);
  CHECK(set2[0].id == "s1");
  CHECK(set2[1].id == "s2");

  CHECK_THROWS_AS(round_checkpoint_set(reg, 3), DataError);
  reg.add(CheckpointRef{"m2", CheckpointKind::round, {}, 2, "base"});
  auto set3 = round_checkpoint_set(reg, 3);
  REQUIRE(set3.size() == 3);
  CHECK(set3[2].id == "m2");

  reg.add(CheckpointRef{"m3", CheckpointKind::round, {}, 3, "base"});
  auto set4 = round_checkpoint_set(reg, 4);
  REQUIRE(set4.size() == 3);
  CHECK(set4[0].id == "s1");
  CHECK(set4[1].id == "s2");
  CHECK(set4[2].id == "m3");

  CHECK_THROWS_AS(round_checkpoint_set(reg, 1), DataError);
}

TEST_CASE("response sampling yields n records per prompt, split evenly") {
  MockBackend backend(MockConfig{}, 51, "base");
  backend.register_checkpoint("a", 0.4);
  backend.register_checkpoint("b", 0.7);

  const std::vector<std::pair<std::string, std::string>> prompts{
      {"pid1", "first prompt"}, {"pid2", "second prompt"}, {"pid3", "third prompt"}};
  SamplingParams sampling{1.0, 0.9, 64, 0};

  const auto records =
      sample_responses(backend, prompts, {"a", "b"}, 7, sampling, 99, BackendLimits{});
  REQUIRE(records.size() == 21);

  std::map<std::string, std::map<std::string, int>> split;
  std::set<std::string> ids;
  for (const auto& r : records) {
    split[r.prompt_id][r.checkpoint_id]++;
    ids.insert(r.id);
    CHECK(r.id == ResponseRecord::make_id(r.prompt_id, r.checkpoint_id, r.sampling.seed, r.text));
    CHECK_FALSE(r.text.empty());
  }
  CHECK(ids.size() == 21);
  for (const auto& [pid, by_ckpt] : split) {
    CHECK(by_ckpt.at("a") == 4);
    CHECK(by_ckpt.at("b") == 3);
  }
}

TEST_CASE("response records are identical regardless of scheduling") {
  MockConfig cfg;
  cfg.delay_ms_max = 3;
  MockBackend backend(cfg, 52, "base");
  backend.register_checkpoint("a", 0.5);

  const std::vector<std::pair<std::string, std::string>> prompts{
      {"x", "prompt x"}, {"y", "prompt y"}};
  SamplingParams sampling{1.0, 0.9, 64, 0};

  BackendLimits serial;
  serial.max_in_flight = 1;
  BackendLimits wide;
  wide.max_in_flight = 8;

  const auto a = sample_responses(backend, prompts, {"base", "a"}, 6, sampling, 7, serial);
  const auto b = sample_responses(backend, prompts, {"base", "a"}, 6, sampling, 7, wide);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].sampling.seed == b[i].sampling.seed);
  }

  const auto c = sample_responses(backend, prompts, {"base", "a"}, 6, sampling, 8, serial);
  CHECK(a[0].text != c[0].text);
}

TEST_CASE("per-response seeds differ across slots and checkpoints") {
  MockBackend backend(MockConfig{}, 53, "base");
  backend.register_checkpoint("a", 0.5);
  const std::vector<std::pair<std::string, std::string>> prompts{{"p", "the prompt"}};
  SamplingParams sampling{1.0, 0.9, 64, 0};
  const auto records =
      sample_responses(backend, prompts, {"base", "a"}, 8, sampling, 1, BackendLimits{});
  std::set<std::uint64_t> seeds;
  for (const auto& r : records) seeds.insert(r.sampling.seed);
  CHECK(seeds.size() == records.size());
}

TEST_CASE("sampling with no checkpoints is an error") {
  MockBackend backend(MockConfig{}, 54, "base");
  SamplingParams sampling{1.0, 0.9, 64, 0};
  CHECK_THROWS_AS(sample_responses(backend, {{"p", "t"}}, {}, 4, sampling, 1, BackendLimits{}),
                  DataError);
}

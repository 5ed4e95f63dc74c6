#include <catch2/catch_amalgamated.hpp>

#include "alignkit/analysis.hpp"
#include "alignkit/orchestrator.hpp"
#include "alignkit/rng.hpp"
#include "test_util.hpp"

using namespace alignkit;
using testutil::TempDir;

TEST_CASE("the scaling curve takes prefix maxima and averages over prompts") {
  const std::vector<std::vector<double>> scores{
      {3.0, 7.0, 5.0, 9.0},
      {6.0, 2.0, 8.0, 4.0},
  };
  const auto curve = bestofn_curve(scores, {1, 2, 3, 4, 10});
  REQUIRE(curve.size() == 5);
  CHECK(curve[0].n == 1);
  CHECK(curve[0].mean_best == Catch::Approx((3.0 + 6.0) / 2));
  CHECK(curve[1].mean_best == Catch::Approx((7.0 + 6.0) / 2));
  CHECK(curve[2].mean_best == Catch::Approx((7.0 + 8.0) / 2));
  CHECK(curve[3].mean_best == Catch::Approx((9.0 + 8.0) / 2));
  // n beyond the stored responses clamps to all of them.
  CHECK(curve[4].mean_best == Catch::Approx((9.0 + 8.0) / 2));
}

TEST_CASE("the scaling curve never decreases in n") {
  Rng rng(81);
  std::vector<std::vector<double>> scores(40);
  for (auto& row : scores) {
    row.resize(32);
    for (auto& s : row) s = 10.0 * rng.unit();
  }
  const auto curve = bestofn_curve(scores, {1, 2, 4, 8, 16, 32});
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].mean_best >= curve[i - 1].mean_best);
  }
}

TEST_CASE("the scaling curve rejects malformed input") {
  CHECK_THROWS_AS(bestofn_curve({}, {1}), DataError);
  CHECK_THROWS_AS(bestofn_curve({{1.0}, {}}, {1}), DataError);
  CHECK_THROWS_AS(bestofn_curve({{1.0}}, {0}), DataError);
}

TEST_CASE("budget equivalence holds exactly for constant-product plans") {
  CHECK(budget_within_tolerance({{200, 50000}, {400, 25000}, {100, 100000}}));
  CHECK(budget_within_tolerance({{200, 10}, {400, 5}, {100, 20}}));
  CHECK(budget_within_tolerance({{123, 77}}));
}

TEST_CASE("budget equivalence tolerates one percent and no more") {
  // Products 10000 and 10099: within 1% of their mean.
  CHECK(budget_within_tolerance({{100, 100}, {101, 99.9901}}, 0.01));
  // Products 10000 and 10300 differ from the mean by ~1.48%.
  CHECK_FALSE(budget_within_tolerance({{100, 100}, {103, 100}}, 0.01));
  CHECK_FALSE(budget_within_tolerance({{200, 50000}, {400, 26000}}));
  CHECK_THROWS_AS(budget_within_tolerance({}), DataError);
  CHECK_FALSE(budget_within_tolerance({{0, 0}, {0, 0}}));
}

namespace {

struct TinyRun {
  TempDir tmp;

  TinyRun() {
    std::string sft;
    for (int i = 0; i < 6; ++i) {
      sft += json{{"prompt", "Question number " + std::to_string(i) + " about a topic."},
                  {"response", "Answer " + std::to_string(i)}}
                 .dump();
      sft += '\n';
    }
    testutil::write_text(tmp.path / "sft.jsonl", sft);
    std::string ann;
    for (int i = 0; i < 8; ++i) {
      ann += json{{"prompt", "graded q " + std::to_string(i)},
                  {"response", "graded a " + std::to_string(i)},
                  {"score", (3 * i) % 11}}
                 .dump();
      ann += '\n';
    }
    testutil::write_text(tmp.path / "judge.jsonl", ann);
    const json cfg{
        {"seed", 456},
        {"rounds", {{"N", 5}, {"K", 3}, {"R", 2}}},
        {"sampling", {{"max_tokens", 48}}},
        {"pool", {{"target_size", 12}, {"k_clusters", 2}}},
        {"seed_data", {{"sft_path", "sft.jsonl"}, {"judge_path", "judge.jsonl"}}},
        {"backend", {{"kind", "mock"}, {"mock", {{"embed_dim", 6}}}}},
        {"trainer", {{"kind", "mock"}}},
    };
    testutil::write_text(tmp.path / "config.json", cfg.dump(2) + "\n");
  }

  RunConfig config() const { return RunConfig::from_file(tmp.path / "config.json"); }
  RunDir run() const { return RunDir::init(tmp.path / "run"); }
};

}  // namespace

TEST_CASE("round reports are written from stored responses and judgments") {
  TinyRun fx;
  Orchestrator orch(fx.config(), fx.run());
  orch.run_pipeline();
  const auto run = fx.run();

  const auto matrix = round_score_matrix(run, 2);
  REQUIRE(matrix.size() == 3);
  for (const auto& row : matrix) CHECK(row.size() == 5);

  const auto report = curve_report(run, 2, {1, 2, 5});
  CHECK(report.at("round").get<int>() == 2);
  REQUIRE(report.at("points").size() == 3);
  double prev = -1;
  for (const auto& p : report.at("points")) {
    CHECK(p.at("mean_best").get<double>() >= prev);
    prev = p.at("mean_best").get<double>();
  }
  CHECK(std::filesystem::exists(run.reports_dir() / "curve-round-2.json"));
  CHECK(std::filesystem::exists(run.reports_dir() / "curve-round-2.txt"));

  const auto parsed = json::parse(read_file(run.reports_dir() / "curve-round-2.json"));
  CHECK(parsed == report);

  const auto text = read_file(run.reports_dir() / "curve-round-2.txt");
  CHECK(text.find("n\tmean_best_score") != std::string::npos);

  CHECK_THROWS_AS(round_score_matrix(run, 7), DataError);
}

TEST_CASE("the progression report covers every completed round") {
  TinyRun fx;
  Orchestrator orch(fx.config(), fx.run());
  orch.run_pipeline();
  const auto run = fx.run();

  const auto report = progression_report(run, fx.config());
  REQUIRE(report.at("rounds").size() == 2);

  const auto& r1 = report.at("rounds")[0];
  CHECK(r1.at("round").get<int>() == 1);
  CHECK(r1.at("status").get<std::string>() == "complete");
  CHECK(r1.at("dataset_rows").get<int>() == 6);
  CHECK_FALSE(r1.contains("mean_score"));

  const auto& r2 = report.at("rounds")[1];
  CHECK(r2.at("round").get<int>() == 2);
  CHECK(r2.at("dataset_rows").get<int>() == 3);
  const double mean = r2.at("mean_score").get<double>();
  const double chosen = r2.at("mean_chosen_score").get<double>();
  CHECK(mean >= 0.0);
  CHECK(mean <= 10.0);
  // Picking the best of five judged responses must not fall below the mean.
  CHECK(chosen >= mean);

  CHECK(std::filesystem::exists(run.reports_dir() / "progression.json"));
  const auto text = read_file(run.reports_dir() / "progression.txt");
  CHECK(text.find("round\tstatus") != std::string::npos);
  CHECK(text.find(r2.at("output_checkpoint").get<std::string>()) != std::string::npos);
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "alignkit/jsonl.hpp"
#include "test_util.hpp"

using json = nlohmann::json;
using testutil::TempDir;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const auto out = tmp.path / ("cli-out-" + std::to_string(counter) + ".txt");
  const auto err = tmp.path / ("cli-err-" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(ALIGNKIT_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (std::filesystem::exists(out)) r.out = alignkit::read_file(out);
  if (std::filesystem::exists(err)) r.err = alignkit::read_file(err);
  return r;
}

void write_fixture(const TempDir& tmp) {
  std::string sft;
  for (int i = 0; i < 6; ++i) {
    sft += json{{"prompt", "Command-line seed prompt " + std::to_string(i) + "."},
                {"response", "Seed reply " + std::to_string(i)}}
               .dump();
    sft += '\n';
  }
  testutil::write_text(tmp.path / "sft.jsonl", sft);
  std::string ann;
  for (int i = 0; i < 8; ++i) {
    ann += json{{"prompt", "cli graded q " + std::to_string(i)},
                {"response", "cli graded a " + std::to_string(i)},
                {"score", (7 * i) % 11}}
               .dump();
    ann += '\n';
  }
  testutil::write_text(tmp.path / "judge.jsonl", ann);
  const json cfg{
      {"seed", 777},
      {"rounds", {{"N", 4}, {"K", 3}, {"R", 2}}},
      {"sampling", {{"max_tokens", 48}}},
      {"pool", {{"target_size", 12}, {"k_clusters", 2}}},
      {"seed_data", {{"sft_path", "sft.jsonl"}, {"judge_path", "judge.jsonl"}}},
      {"backend", {{"kind", "mock"}, {"mock", {{"embed_dim", 6}}}}},
      {"trainer", {{"kind", "mock"}}},
  };
  testutil::write_text(tmp.path / "config.json", cfg.dump(2) + "\n");
}

}  // namespace

TEST_CASE("help and usage errors exit with the documented codes") {
  TempDir tmp;
  CHECK(run_cli(tmp, "--help").code == 0);
  CHECK(run_cli(tmp, "").code == 2);
  CHECK(run_cli(tmp, "status --no-such-flag").code == 2);
  CHECK(run_cli(tmp, "frobnicate").code == 2);

  // init without --config is a usage error.
  const auto r = run_cli(tmp, "init --run-dir " + (tmp.path / "run").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("--config") != std::string::npos);
}

TEST_CASE("configuration problems exit with the config code") {
  TempDir tmp;
  testutil::write_text(tmp.path / "broken.json", "{not json\n");
  const auto bad = run_cli(tmp, "init --config " + (tmp.path / "broken.json").string() +
                                    " --run-dir " + (tmp.path / "run").string());
  CHECK(bad.code == 3);

  write_fixture(tmp);
  // A valid config but no run directory yet.
  const auto missing =
      run_cli(tmp, "status --config " + (tmp.path / "config.json").string() +
                       " --run-dir " + (tmp.path / "nope").string());
  CHECK(missing.code == 3);
  CHECK(missing.err.find("LAYOUT") != std::string::npos);
}

TEST_CASE("the whole pipeline runs through the command line") {
  TempDir tmp;
  write_fixture(tmp);
  const std::string common = " --config " + (tmp.path / "config.json").string() +
                             " --run-dir " + (tmp.path / "run").string();

  const auto init = run_cli(tmp, "init" + common);
  REQUIRE(init.code == 0);
  CHECK(init.out.find("initialized") != std::string::npos);

  const auto pipe = run_cli(tmp, "run-pipeline" + common);
  REQUIRE(pipe.code == 0);
  const json st = json::parse(pipe.out);
  CHECK(st.at("rounds_complete").get<int>() == 2);
  CHECK(st.at("pool").at("prompts").get<int>() == 12);

  const auto status = run_cli(tmp, "status" + common);
  REQUIRE(status.code == 0);
  CHECK(json::parse(status.out).at("rounds_complete").get<int>() == 2);

  const auto curve = run_cli(tmp, "curve --round 2" + common);
  REQUIRE(curve.code == 0);
  const json c = json::parse(curve.out);
  CHECK(c.at("round").get<int>() == 2);
  CHECK(c.at("points").size() >= 2);
  CHECK(std::filesystem::exists(tmp.path / "run" / "reports" / "curve-round-2.json"));

  CHECK(run_cli(tmp, "curve --round 1" + common).code == 2);

  const auto report = run_cli(tmp, "report" + common);
  REQUIRE(report.code == 0);
  CHECK(report.out.find("round\tstatus") != std::string::npos);

  // Completed work is not redone.
  const auto again = run_cli(tmp, "run-pipeline" + common);
  CHECK(again.code == 0);
}

TEST_CASE("each stage can be driven as its own command") {
  TempDir tmp;
  write_fixture(tmp);
  const std::string common = " --config " + (tmp.path / "config.json").string() +
                             " --run-dir " + (tmp.path / "run2").string();

  REQUIRE(run_cli(tmp, "init" + common).code == 0);
  REQUIRE(run_cli(tmp, "run-round --round 1" + common).code == 0);
  REQUIRE(run_cli(tmp, "synth-prompts" + common).code == 0);

  const auto embed = run_cli(tmp, "embed" + common);
  REQUIRE(embed.code == 0);
  CHECK(embed.out.find("embedded 12 prompts") != std::string::npos);

  REQUIRE(run_cli(tmp, "cluster" + common).code == 0);
  REQUIRE(run_cli(tmp, "sample --round 2" + common).code == 0);
  CHECK(std::filesystem::exists(tmp.path / "run2" / "responses" / "round-2" /
                                "records.jsonl"));

  REQUIRE(run_cli(tmp, "judge --round 2" + common).code == 0);
  CHECK(std::filesystem::exists(tmp.path / "run2" / "judgments" / "round-2" /
                                "records.jsonl"));

  REQUIRE(run_cli(tmp, "run-round --round 2" + common).code == 0);
  const auto status = run_cli(tmp, "status" + common);
  REQUIRE(status.code == 0);
  CHECK(json::parse(status.out).at("rounds_complete").get<int>() == 2);

  // Rounds out of range are usage errors.
  CHECK(run_cli(tmp, "run-round --round 9" + common).code == 2);
  CHECK(run_cli(tmp, "sample --round 1" + common).code == 2);
}

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alignkit/alignkit.hpp"

namespace {

using namespace alignkit;

struct CliOptions {
  std::string config_path;
  std::string run_dir = "run";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
};

RunConfig load_config(const CliOptions& opt) {
  if (opt.config_path.empty()) throw UsageError("--config is required for this command");
  RunConfig cfg = RunConfig::from_file(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.backend) {
    if (*opt.backend == "mock") {
      cfg.backend.kind = "mock";
    } else {
      cfg.backend.kind = "http";
      cfg.backend.endpoint = *opt.backend;
    }
    cfg.validate();
  }
  return cfg;
}

std::vector<int> default_curve_ns(int n_max) {
  std::vector<int> ns;
  for (int n : {1, 2, 4, 8, 16, 32, 64, 128}) {
    if (n < n_max) ns.push_back(n);
  }
  ns.push_back(n_max);
  return ns;
}

int dispatch(const std::string& verb, const CliOptions& opt, int round,
             std::vector<int> ns) {
  if (verb == "init") {
    RunConfig cfg = load_config(opt);
    RunDir run = RunDir::init(opt.run_dir);
    RunLock lock = run.lock();
    Orchestrator(cfg, run).init_seed_data();
    std::cout << "initialized " << run.root().string() << "\n";
    return 0;
  }

  RunConfig cfg = load_config(opt);
  RunDir run = RunDir::open(opt.run_dir);

  if (verb == "status") {
    std::cout << Orchestrator(cfg, run).status().dump(2) << "\n";
    return 0;
  }
  if (verb == "curve") {
    if (round < 2) throw UsageError("curve needs --round 2 or later");
    if (ns.empty()) ns = default_curve_ns(cfg.rounds.n_responses);
    const json out = curve_report(run, round, ns);
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  if (verb == "report") {
    progression_report(run, cfg);
    std::cout << read_file(run.reports_dir() / "progression.txt");
    return 0;
  }

  RunLock lock = run.lock();
  Orchestrator orch(cfg, run);
  if (verb == "synth-prompts") {
    orch.init_seed_data();
    orch.ensure_pool();
  } else if (verb == "embed") {
    orch.ensure_embeddings();
    std::cout << "embedded " << count_jsonl_records(run.prompts_embeddings())
              << " prompts\n";
  } else if (verb == "cluster") {
    orch.ensure_clusters();
  } else if (verb == "sample") {
    if (round < 2) throw UsageError("sample needs --round 2 or later");
    orch.run_round(round, "responses");
  } else if (verb == "judge") {
    if (round < 2) throw UsageError("judge needs --round 2 or later");
    orch.run_round(round, "judgments");
  } else if (verb == "judge-distill") {
    orch.distill_judge();
  } else if (verb == "run-round") {
    if (round < 1) throw UsageError("run-round needs --round");
    orch.run_round(round);
  } else if (verb == "run-pipeline") {
    orch.run_pipeline();
    std::cout << orch.status().dump(2) << "\n";
  } else {
    throw UsageError("unknown command: " + verb);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-bootstrapping alignment data engine"};
  app.require_subcommand(1);
  // Global options may appear after the verb (`alignkit init --config ...`).
  app.fallthrough();

  CliOptions opt;
  std::uint64_t seed_val = 0;
  std::string backend_val;
  app.add_option("--config", opt.config_path, "Path to the run configuration (JSON)");
  app.add_option("--run-dir", opt.run_dir, "Run directory (default: run)");
  auto* seed_opt =
      app.add_option("--seed", seed_val, "Override the configured random seed");
  auto* backend_opt = app.add_option(
      "--backend", backend_val, "Override the backend: 'mock' or an http endpoint");

  int round = 0;
  std::vector<int> ns;
  const char* verbs[] = {"init",  "synth-prompts", "embed",       "cluster",
                         "sample", "judge",        "judge-distill", "run-round",
                         "run-pipeline", "curve",  "report",      "status"};
  const char* help[] = {
      "Create the run directory and ingest the seed data",
      "Grow the prompt pool with model-written prompts",
      "Embed every pool prompt",
      "Cluster the embedded pool",
      "Pick prompts and sample responses for a round",
      "Judge a round's sampled responses",
      "Self-distill the judge and retrain it",
      "Run one full round",
      "Run every round in order",
      "Best-of-n scaling curve for a judged round",
      "Round-by-round progression report",
      "Run state summary (JSON)"};
  for (std::size_t i = 0; i < std::size(verbs); ++i) {
    auto* sub = app.add_subcommand(verbs[i], help[i]);
    sub->add_option("--round", round, "Round number");
    if (std::string(verbs[i]) == "curve") {
      sub->add_option("--n", ns, "Sample counts for the curve");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(alignkit::ExitCode::usage);
  }
  if (seed_opt->count() > 0) opt.seed = seed_val;
  if (backend_opt->count() > 0) opt.backend = backend_val;

  try {
    return dispatch(app.get_subcommands().front()->get_name(), opt, round, ns);
  } catch (const alignkit::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(alignkit::ExitCode::runtime);
  }
}

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignkit/config.hpp"
#include "alignkit/errors.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/records.hpp"

namespace alignkit {

/// One text completion. `request_key` identifies the logical request across
/// retries and restarts; equal keys must yield equal results on a
/// deterministic backend.
struct CompletionRequest {
  std::string checkpoint;
  std::string prompt;
  SamplingParams sampling;
  std::string request_key;
};

struct CompletionResult {
  std::string text;
};

/// Score a fixed closed set of continuations. Backends return one log
/// probability per option, in option order. Values need not be normalized.
struct OptionScoreRequest {
  std::string checkpoint;
  std::string prompt;
  std::vector<std::string> options;
  std::string request_key;
};

struct OptionScoreResult {
  std::vector<double> logprobs;
};

/// Inference surface. Everything the engine needs from a model server:
/// sampling, closed-set scoring, and embeddings. Implementations must be
/// thread safe; the dispatcher issues calls concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompletionResult complete(const CompletionRequest& req) = 0;

  /// Throws CapabilityError if the backend cannot score fixed options.
  virtual OptionScoreResult score_options(const OptionScoreRequest& req) = 0;

  virtual std::vector<double> embed(const std::string& text) = 0;
};

/// One training invocation: finetune `base_checkpoint` on `dataset_paths`
/// (applied in order) under `objective`, returning the new checkpoint id.
struct TrainJob {
  std::string base_checkpoint;
  std::vector<std::string> dataset_paths;
  Objective objective = Objective::sft;
  std::uint64_t seed = 0;
  std::string tag;  // human-readable label for the produced checkpoint

  json to_json() const {
    return json{{"base_checkpoint", base_checkpoint},
                {"dataset_paths", dataset_paths},
                {"objective", to_string(objective)},
                {"seed", seed},
                {"tag", tag}};
  }
};

class Trainer {
 public:
  virtual ~Trainer() = default;

  /// Returns the id of the newly trained checkpoint. Throws TrainerError on
  /// failure. Implementations may take arbitrarily long; the orchestrator
  /// records the job before invoking and the result after.
  virtual std::string train(const TrainJob& job) = 0;
};

/// Shells out to an external training harness:
///   <command> <job-manifest.json>
/// The harness trains and prints the new checkpoint id as the last
/// non-empty line of stdout.
class CommandTrainer : public Trainer {
 public:
  CommandTrainer(std::string command, std::filesystem::path work_dir)
      : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

  std::string train(const TrainJob& job) override {
    std::filesystem::create_directories(work_dir_);
    const auto manifest = work_dir_ / ("job-" + job.tag + ".json");
    atomic_write_file(manifest, job.to_json().dump(2) + "\n");

    const std::string cmd = command_ + " " + manifest.string() + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw TrainerError("cannot launch trainer command: " + command_);
    std::string out;
    char buf[4096];
    size_t got;
    while ((got = ::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
    const int rc = ::pclose(pipe);
    if (rc != 0) {
      throw TrainerError("trainer command failed (exit " + std::to_string(rc) +
                         "): " + out.substr(0, 500));
    }
    std::string id = last_nonempty_line(out);
    if (id.empty()) throw TrainerError("trainer command produced no checkpoint id");
    return id;
  }

 private:
  static std::string last_nonempty_line(const std::string& out) {
    std::string id;
    std::size_t pos = 0;
    while (pos < out.size()) {
      auto nl = out.find('\n', pos);
      if (nl == std::string::npos) nl = out.size();
      std::string line = out.substr(pos, nl - pos);
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) id = line;
      pos = nl + 1;
    }
    return id;
  }

  std::string command_;
  std::filesystem::path work_dir_;
};

}  // namespace alignkit

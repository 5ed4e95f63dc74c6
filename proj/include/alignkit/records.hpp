#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignkit/errors.hpp"
#include "alignkit/hash.hpp"
#include "alignkit/version.hpp"

namespace alignkit {

using json = nlohmann::json;

/// Content address for a record: hex SHA-256 of the (already normalized)
/// UTF-8 text. Deterministic and stable across runs and platforms.
inline std::string record_id(std::string_view normalized_text) {
  return sha256_hex(normalized_text);
}

// ---------------------------------------------------------------------------
// PromptRecord

enum class PromptSource { seed, synthetic };

inline const char* to_string(PromptSource s) {
  return s == PromptSource::seed ? "seed" : "synthetic";
}

inline PromptSource prompt_source_from_string(const std::string& s) {
  if (s == "seed") return PromptSource::seed;
  if (s == "synthetic") return PromptSource::synthetic;
  throw DataError("unknown prompt source: " + s);
}

struct PromptRecord {
  std::string id;
  std::string text;
  PromptSource source = PromptSource::synthetic;
  std::optional<int> cluster_id;
  std::optional<int> used_in_round;

  json to_json() const {
    json j{{"id", id}, {"text", text}, {"source", to_string(source)}};
    if (cluster_id) j["cluster_id"] = *cluster_id;
    if (used_in_round) j["used_in_round"] = *used_in_round;
    return j;
  }

  static PromptRecord from_json(const json& j) {
    PromptRecord r;
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.source = prompt_source_from_string(j.at("source").get<std::string>());
    if (j.contains("cluster_id")) r.cluster_id = j.at("cluster_id").get<int>();
    if (j.contains("used_in_round")) r.used_in_round = j.at("used_in_round").get<int>();
    return r;
  }
};

// ---------------------------------------------------------------------------
// ResponseRecord

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.9;
  int max_tokens = 256;
  std::uint64_t seed = 0;

  json to_json() const {
    return json{{"temperature", temperature},
                {"top_p", top_p},
                {"max_tokens", max_tokens},
                {"seed", seed}};
  }

  static SamplingParams from_json(const json& j) {
    // All fields are required on read: nothing is defaulted at load time.
    SamplingParams p;
    p.temperature = j.at("temperature").get<double>();
    p.top_p = j.at("top_p").get<double>();
    p.max_tokens = j.at("max_tokens").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
  }
};

struct ResponseRecord {
  std::string id;
  std::string prompt_id;
  std::string checkpoint_id;
  std::string text;
  SamplingParams sampling;

  /// Response identity covers provenance and content, so the N sampled
  /// responses of one prompt stay distinct records even when texts collide.
  static std::string make_id(const std::string& prompt_id, const std::string& checkpoint_id,
                             std::uint64_t seed, const std::string& text) {
    return sha256_hex(detail::join_parts(
        {"response", prompt_id, checkpoint_id, std::to_string(seed), text}));
  }

  json to_json() const {
    return json{{"id", id},
                {"prompt_id", prompt_id},
                {"checkpoint_id", checkpoint_id},
                {"text", text},
                {"sampling", sampling.to_json()}};
  }

  static ResponseRecord from_json(const json& j) {
    ResponseRecord r;
    r.id = j.at("id").get<std::string>();
    r.prompt_id = j.at("prompt_id").get<std::string>();
    r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.sampling = SamplingParams::from_json(j.at("sampling"));
    return r;
  }
};

// ---------------------------------------------------------------------------
// Judgment

inline constexpr int kScoreLevels = 11;  // integer scores 0..10

struct Judgment {
  std::string response_id;
  std::array<double, kScoreLevels> dist{};
  double score = 0.0;
  std::string judge_checkpoint;

  void validate() const {
    double sum = 0.0;
    double mean = 0.0;
    for (int i = 0; i < kScoreLevels; ++i) {
      if (!(dist[i] >= 0.0)) throw DataError("judgment dist entry negative or NaN");
      sum += dist[i];
      mean += i * dist[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("judgment dist does not sum to 1");
    if (std::abs(mean - score) > 1e-9) throw DataError("judgment score inconsistent with dist");
    if (score < 0.0 || score > 10.0) throw DataError("judgment score out of [0,10]");
  }

  json to_json() const {
    return json{{"response_id", response_id},
                {"dist", std::vector<double>(dist.begin(), dist.end())},
                {"score", score},
                {"judge_checkpoint", judge_checkpoint}};
  }

  static Judgment from_json(const json& j) {
    Judgment g;
    g.response_id = j.at("response_id").get<std::string>();
    auto d = j.at("dist").get<std::vector<double>>();
    if (d.size() != kScoreLevels) throw DataError("judgment dist must have 11 entries");
    std::copy(d.begin(), d.end(), g.dist.begin());
    g.score = j.at("score").get<double>();
    g.judge_checkpoint = j.at("judge_checkpoint").get<std::string>();
    g.validate();
    return g;
  }
};

// ---------------------------------------------------------------------------
// CheckpointRef

enum class CheckpointKind { base, sft_seed, round, judge, judge_distilled };

inline const char* to_string(CheckpointKind k) {
  switch (k) {
    case CheckpointKind::base: return "base";
    case CheckpointKind::sft_seed: return "sft_seed";
    case CheckpointKind::round: return "round";
    case CheckpointKind::judge: return "judge";
    case CheckpointKind::judge_distilled: return "judge_distilled";
  }
  return "base";
}

inline CheckpointKind checkpoint_kind_from_string(const std::string& s) {
  if (s == "base") return CheckpointKind::base;
  if (s == "sft_seed") return CheckpointKind::sft_seed;
  if (s == "round") return CheckpointKind::round;
  if (s == "judge") return CheckpointKind::judge;
  if (s == "judge_distilled") return CheckpointKind::judge_distilled;
  throw DataError("unknown checkpoint kind: " + s);
}

struct CheckpointRef {
  std::string id;
  CheckpointKind kind = CheckpointKind::base;
  std::optional<int> index;   // sft_seed only: which training seed (1 or 2)
  std::optional<int> round;   // round kind only
  std::optional<std::string> parent;

  void validate() const {
    if (id.empty()) throw DataError("checkpoint id empty");
    if (kind == CheckpointKind::base && parent) {
      throw DataError("base checkpoint must not have a parent");
    }
    if (kind == CheckpointKind::sft_seed && !index) {
      throw DataError("sft_seed checkpoint requires an index");
    }
    if (kind == CheckpointKind::round && !round) {
      throw DataError("round checkpoint requires a round number");
    }
  }

  json to_json() const {
    json j{{"id", id}, {"kind", to_string(kind)}};
    if (index) j["index"] = *index;
    if (round) j["round"] = *round;
    if (parent) j["parent"] = *parent;
    return j;
  }

  static CheckpointRef from_json(const json& j) {
    CheckpointRef r;
    r.id = j.at("id").get<std::string>();
    r.kind = checkpoint_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("index")) r.index = j.at("index").get<int>();
    if (j.contains("round")) r.round = j.at("round").get<int>();
    if (j.contains("parent")) r.parent = j.at("parent").get<std::string>();
    r.validate();
    return r;
  }
};

// ---------------------------------------------------------------------------
// TrainingExample

enum class Objective { sft, bofn_sft, dpo, judge_sft };

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::sft: return "sft";
    case Objective::bofn_sft: return "bofn_sft";
    case Objective::dpo: return "dpo";
    case Objective::judge_sft: return "judge_sft";
  }
  return "sft";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "sft") return Objective::sft;
  if (s == "bofn_sft") return Objective::bofn_sft;
  if (s == "dpo") return Objective::dpo;
  if (s == "judge_sft") return Objective::judge_sft;
  throw DataError("unknown objective: " + s);
}

struct TrainingExample {
  std::string prompt_id;
  std::string chosen_response_id;
  std::optional<std::string> rejected_response_id;
  int round = 0;
  Objective objective = Objective::bofn_sft;

  void validate() const {
    if (objective != Objective::bofn_sft && objective != Objective::dpo) {
      throw DataError("training example objective must be bofn_sft or dpo");
    }
    const bool has_rejected = rejected_response_id.has_value();
    if ((objective == Objective::dpo) != has_rejected) {
      throw DataError("rejected response present iff objective is dpo");
    }
    if (has_rejected && *rejected_response_id == chosen_response_id) {
      throw DataError("rejected response equals chosen response");
    }
  }

  json to_json() const {
    json j{{"prompt_id", prompt_id},
           {"chosen_response_id", chosen_response_id},
           {"round", round},
           {"objective", to_string(objective)}};
    if (rejected_response_id) j["rejected_response_id"] = *rejected_response_id;
    return j;
  }

  static TrainingExample from_json(const json& j) {
    TrainingExample e;
    e.prompt_id = j.at("prompt_id").get<std::string>();
    e.chosen_response_id = j.at("chosen_response_id").get<std::string>();
    if (j.contains("rejected_response_id")) {
      e.rejected_response_id = j.at("rejected_response_id").get<std::string>();
    }
    e.round = j.at("round").get<int>();
    e.objective = objective_from_string(j.at("objective").get<std::string>());
    e.validate();
    return e;
  }
};

// ---------------------------------------------------------------------------
// RoundManifest

/// Immutable record of one completed (or failed) round. All paths are
/// relative to the run directory so reruns in different locations produce
/// byte-identical manifests.
struct RoundManifest {
  int round = 0;
  std::vector<std::string> prompt_ids;
  std::string dataset_path;
  std::vector<std::string> training_inputs;  // D1..Dr in round order
  std::string base_checkpoint;
  std::string output_checkpoint;
  std::vector<std::string> aux_checkpoints;  // round 1 carries the second SFT seed here
  std::string config_digest;
  std::uint64_t rng_seed = 0;
  std::string hash_algo = kHashAlgo;
  std::string status = "complete";  // "complete" | "failed"
  json training_invocation;          // trainer hook call log: job manifest, id

  void validate() const {
    if (round < 1) throw DataError("manifest round must be >= 1");
    if (status == "complete" &&
        training_inputs.size() != static_cast<std::size_t>(round)) {
      throw DataError("manifest training_inputs must have exactly `round` entries");
    }
    if (status != "complete" && status != "failed") {
      throw DataError("manifest status must be complete or failed");
    }
  }

  json to_json() const {
    json j{{"round", round},
           {"prompt_ids", prompt_ids},
           {"dataset_path", dataset_path},
           {"training_inputs", training_inputs},
           {"base_checkpoint", base_checkpoint},
           {"output_checkpoint", output_checkpoint},
           {"config_digest", config_digest},
           {"rng_seed", rng_seed},
           {"hash_algo", hash_algo},
           {"status", status}};
    if (!aux_checkpoints.empty()) j["aux_checkpoints"] = aux_checkpoints;
    if (!training_invocation.is_null()) j["training_invocation"] = training_invocation;
    return j;
  }

  static RoundManifest from_json(const json& j) {
    RoundManifest m;
    m.round = j.at("round").get<int>();
    m.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
    m.dataset_path = j.at("dataset_path").get<std::string>();
    m.training_inputs = j.at("training_inputs").get<std::vector<std::string>>();
    m.base_checkpoint = j.at("base_checkpoint").get<std::string>();
    m.output_checkpoint = j.at("output_checkpoint").get<std::string>();
    if (j.contains("aux_checkpoints")) {
      m.aux_checkpoints = j.at("aux_checkpoints").get<std::vector<std::string>>();
    }
    m.config_digest = j.at("config_digest").get<std::string>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.hash_algo = j.at("hash_algo").get<std::string>();
    m.status = j.at("status").get<std::string>();
    if (j.contains("training_invocation")) m.training_invocation = j.at("training_invocation");
    m.validate();
    return m;
  }
};

}  // namespace alignkit

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alignkit/errors.hpp"
#include "alignkit/hash.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/records.hpp"

namespace alignkit {

enum class DpoMode { best_worst, best_random, random_pair };

inline const char* to_string(DpoMode m) {
  switch (m) {
    case DpoMode::best_worst: return "best_worst";
    case DpoMode::best_random: return "best_random";
    case DpoMode::random_pair: return "random_pair";
  }
  return "best_random";
}

inline DpoMode dpo_mode_from_string(const std::string& s) {
  if (s == "best_worst") return DpoMode::best_worst;
  if (s == "best_random") return DpoMode::best_random;
  if (s == "random_pair") return DpoMode::random_pair;
  throw ConfigError("rounds.dpo_mode: unknown mode '" + s + "'");
}

struct BackendLimits {
  int max_in_flight = 8;
  int retry_limit = 3;
  std::vector<int> retry_backoff_ms = {10, 50, 250};
  int timeout_ms = 30000;

  void validate() const {
    if (max_in_flight < 1) throw ConfigError("backend.limits.max_in_flight must be >= 1");
    if (retry_limit < 0) throw ConfigError("backend.limits.retry_limit must be >= 0");
  }
};

struct RoundsConfig {
  int n_responses = 200;   // N: responses sampled per prompt
  int k_prompts = 50000;   // K: prompts per training round
  int r_rounds = 10;       // R: total rounds including the initial SFT round
  Objective objective = Objective::bofn_sft;
  DpoMode dpo_mode = DpoMode::best_random;
};

struct PoolConfig {
  int target_size = 200000;
  int k_clusters = 0;  // 0 = auto: max(1, n/100), keeping prompts-per-cluster density
  int max_prompt_tokens = 2048;
  int synth_attempt_factor = 20;
  int embed_batch = 64;
};

struct KmeansConfig {
  int batch_size = 4096;
  double tol = 1e-4;
  int max_iters = 100;
};

struct SeedDataConfig {
  std::string sft_path;    // JSONL of {prompt, response}
  std::string judge_path;  // JSONL of {prompt, response, score}
};

struct JudgeConfig {
  bool distill = false;
  int distill_pairs = 20000;
  std::string distill_from = "judge";  // "judge" (continue finetuned judge) | "base"
  std::optional<std::string> template_path;
};

struct MockCheckpointConfig {
  double quality = -1.0;  // <0 means unset
  std::vector<std::string> phrases;
};

struct MockConfig {
  std::vector<std::string> phrases;  // empty -> builtin table
  std::map<std::string, MockCheckpointConfig> checkpoints;
  int response_words = 12;
  int embed_dim = 16;
  bool quality_marker = true;
  std::string option_model = "quality";  // "quality" | "uniform" | "none"
  double judge_noise = 0.0;
  double dist_sigma = 0.5;
  double base_quality = 0.25;
  double trainer_halflife = 80.0;
  int delay_ms_max = 0;
  int fail_first_attempts = 0;
};

struct BackendConfig {
  std::string kind = "mock";  // "mock" | "http"
  std::string endpoint;       // http backend only
  BackendLimits limits;
  MockConfig mock;
};

struct TrainerConfig {
  std::string kind = "mock";  // "mock" | "command"
  std::string command;        // invoked as: <command> <job-manifest-path>
};

/// Whole-run configuration, loaded from a single JSON file. The file is a
/// committed artifact: its digest is recorded in every manifest, and the run
/// directory is deliberately not part of it.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string base_checkpoint = "base";
  RoundsConfig rounds;
  SamplingParams sampling{1.0, 0.9, 256, 0};
  PoolConfig pool;
  KmeansConfig kmeans;
  SeedDataConfig seed_data;
  JudgeConfig judge;
  BackendConfig backend;
  TrainerConfig trainer;

  std::string digest;                   // sha256 of the config file bytes
  std::filesystem::path config_dir;     // for resolving seed data paths

  void validate() const {
    if (rounds.n_responses < 1) throw ConfigError("rounds.N must be >= 1");
    if (rounds.k_prompts < 1) throw ConfigError("rounds.K must be >= 1");
    if (rounds.r_rounds < 2) throw ConfigError("rounds.R must be >= 2");
    if (sampling.temperature < 0) throw ConfigError("sampling.temperature must be >= 0");
    if (sampling.top_p <= 0 || sampling.top_p > 1) {
      throw ConfigError("sampling.top_p must be in (0,1]");
    }
    if (sampling.max_tokens < 1) throw ConfigError("sampling.max_tokens must be >= 1");
    if (backend.kind != "mock" && backend.kind != "http") {
      throw ConfigError("backend.kind must be 'mock' or 'http'");
    }
    if (backend.kind == "http" && backend.endpoint.empty()) {
      throw ConfigError("backend.endpoint is required for backend.kind=http");
    }
    if (trainer.kind != "mock" && trainer.kind != "command") {
      throw ConfigError("trainer.kind must be 'mock' or 'command'");
    }
    if (trainer.kind == "command" && trainer.command.empty()) {
      throw ConfigError("trainer.command is required for trainer.kind=command");
    }
    if (judge.distill_from != "judge" && judge.distill_from != "base") {
      throw ConfigError("judge.distill_from must be 'judge' or 'base'");
    }
    backend.limits.validate();
  }

  std::filesystem::path resolve_seed_path(const std::string& rel) const {
    std::filesystem::path p(rel);
    if (p.is_absolute()) return p;
    return config_dir / p;
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    std::string bytes;
    try {
      bytes = read_file(path);
    } catch (const Error&) {
      throw ConfigError("cannot read config file: " + path.string());
    }
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    RunConfig cfg = from_json(j);
    cfg.digest = sha256_hex(bytes);
    cfg.config_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return cfg;
  }

  static RunConfig from_json(const json& j);
};

namespace detail {

// Field-extraction helpers that turn type mismatches into field-level
// ConfigErrors instead of raw json exceptions.
template <class T>
void get_to(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field " + scope + key + ": wrong type");
  }
}

inline void require_known_keys(const json& j, std::initializer_list<const char*> known,
                               const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("unknown config key: " + scope + it.key());
  }
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
  using detail::get_to;
  using detail::require_known_keys;
  RunConfig cfg;
  require_known_keys(j, {"seed", "base_checkpoint", "rounds", "sampling", "pool", "kmeans",
                         "seed_data", "judge", "backend", "trainer"},
                     "");
  get_to(j, "seed", cfg.seed, "");
  get_to(j, "base_checkpoint", cfg.base_checkpoint, "");

  if (j.contains("rounds")) {
    const json& r = j.at("rounds");
    require_known_keys(r, {"N", "K", "R", "objective", "dpo_mode"}, "rounds.");
    get_to(r, "N", cfg.rounds.n_responses, "rounds.");
    get_to(r, "K", cfg.rounds.k_prompts, "rounds.");
    get_to(r, "R", cfg.rounds.r_rounds, "rounds.");
    if (r.contains("objective")) {
      const auto s = r.at("objective").get<std::string>();
      if (s != "bofn_sft" && s != "dpo") {
        throw ConfigError("rounds.objective must be 'bofn_sft' or 'dpo'");
      }
      cfg.rounds.objective = objective_from_string(s);
    }
    if (r.contains("dpo_mode")) {
      cfg.rounds.dpo_mode = dpo_mode_from_string(r.at("dpo_mode").get<std::string>());
    }
  }

  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    require_known_keys(s, {"temperature", "top_p", "max_tokens"}, "sampling.");
    get_to(s, "temperature", cfg.sampling.temperature, "sampling.");
    get_to(s, "top_p", cfg.sampling.top_p, "sampling.");
    get_to(s, "max_tokens", cfg.sampling.max_tokens, "sampling.");
  }

  if (j.contains("pool")) {
    const json& p = j.at("pool");
    require_known_keys(
        p, {"target_size", "k_clusters", "max_prompt_tokens", "synth_attempt_factor",
            "embed_batch"},
        "pool.");
    get_to(p, "target_size", cfg.pool.target_size, "pool.");
    get_to(p, "k_clusters", cfg.pool.k_clusters, "pool.");
    get_to(p, "max_prompt_tokens", cfg.pool.max_prompt_tokens, "pool.");
    get_to(p, "synth_attempt_factor", cfg.pool.synth_attempt_factor, "pool.");
    get_to(p, "embed_batch", cfg.pool.embed_batch, "pool.");
  }

  if (j.contains("kmeans")) {
    const json& k = j.at("kmeans");
    require_known_keys(k, {"batch_size", "tol", "max_iters"}, "kmeans.");
    get_to(k, "batch_size", cfg.kmeans.batch_size, "kmeans.");
    get_to(k, "tol", cfg.kmeans.tol, "kmeans.");
    get_to(k, "max_iters", cfg.kmeans.max_iters, "kmeans.");
  }

  if (j.contains("seed_data")) {
    const json& s = j.at("seed_data");
    require_known_keys(s, {"sft_path", "judge_path"}, "seed_data.");
    get_to(s, "sft_path", cfg.seed_data.sft_path, "seed_data.");
    get_to(s, "judge_path", cfg.seed_data.judge_path, "seed_data.");
  }

  if (j.contains("judge")) {
    const json& g = j.at("judge");
    require_known_keys(g, {"distill", "distill_pairs", "distill_from", "template_path"},
                       "judge.");
    get_to(g, "distill", cfg.judge.distill, "judge.");
    get_to(g, "distill_pairs", cfg.judge.distill_pairs, "judge.");
    get_to(g, "distill_from", cfg.judge.distill_from, "judge.");
    if (g.contains("template_path")) {
      cfg.judge.template_path = g.at("template_path").get<std::string>();
    }
  }

  if (j.contains("backend")) {
    const json& b = j.at("backend");
    require_known_keys(b, {"kind", "endpoint", "limits", "mock"}, "backend.");
    get_to(b, "kind", cfg.backend.kind, "backend.");
    get_to(b, "endpoint", cfg.backend.endpoint, "backend.");
    if (b.contains("limits")) {
      const json& l = b.at("limits");
      require_known_keys(l, {"max_in_flight", "retry_limit", "retry_backoff_ms", "timeout_ms"},
                         "backend.limits.");
      get_to(l, "max_in_flight", cfg.backend.limits.max_in_flight, "backend.limits.");
      get_to(l, "retry_limit", cfg.backend.limits.retry_limit, "backend.limits.");
      get_to(l, "retry_backoff_ms", cfg.backend.limits.retry_backoff_ms, "backend.limits.");
      get_to(l, "timeout_ms", cfg.backend.limits.timeout_ms, "backend.limits.");
    }
    if (b.contains("mock")) {
      const json& m = b.at("mock");
      require_known_keys(m,
                         {"phrases", "checkpoints", "response_words", "embed_dim",
                          "quality_marker", "option_model", "judge_noise", "dist_sigma",
                          "base_quality", "trainer_halflife", "delay_ms_max",
                          "fail_first_attempts"},
                         "backend.mock.");
      MockConfig& mc = cfg.backend.mock;
      get_to(m, "phrases", mc.phrases, "backend.mock.");
      get_to(m, "response_words", mc.response_words, "backend.mock.");
      get_to(m, "embed_dim", mc.embed_dim, "backend.mock.");
      get_to(m, "quality_marker", mc.quality_marker, "backend.mock.");
      get_to(m, "option_model", mc.option_model, "backend.mock.");
      get_to(m, "judge_noise", mc.judge_noise, "backend.mock.");
      get_to(m, "dist_sigma", mc.dist_sigma, "backend.mock.");
      get_to(m, "base_quality", mc.base_quality, "backend.mock.");
      get_to(m, "trainer_halflife", mc.trainer_halflife, "backend.mock.");
      get_to(m, "delay_ms_max", mc.delay_ms_max, "backend.mock.");
      get_to(m, "fail_first_attempts", mc.fail_first_attempts, "backend.mock.");
      if (m.contains("checkpoints")) {
        for (auto it = m.at("checkpoints").begin(); it != m.at("checkpoints").end(); ++it) {
          MockCheckpointConfig cc;
          get_to(*it, "quality", cc.quality, "backend.mock.checkpoints.");
          get_to(*it, "phrases", cc.phrases, "backend.mock.checkpoints.");
          mc.checkpoints[it.key()] = cc;
        }
      }
    }
  }

  if (j.contains("trainer")) {
    const json& t = j.at("trainer");
    require_known_keys(t, {"kind", "command"}, "trainer.");
    get_to(t, "kind", cfg.trainer.kind, "trainer.");
    get_to(t, "command", cfg.trainer.command, "trainer.");
  }

  cfg.validate();
  return cfg;
}

}  // namespace alignkit

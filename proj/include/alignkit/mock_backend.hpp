#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "alignkit/backend.hpp"
#include "alignkit/config.hpp"
#include "alignkit/hash.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/rng.hpp"

namespace alignkit {

/// Deterministic in-process model server for tests and desk-scale runs.
///
/// Each checkpoint has a latent quality q in [0,1]. A completion draws a
/// per-(checkpoint, prompt, seed) latent value v = q * (0.5 + 0.5u) and embeds
/// it in the text as a trailing marker word "q=0.NNNN", so judging can recover
/// it. Training produces checkpoints whose quality grows with the amount of
/// data seen, which makes multi-round progressions measurably improve.
///
/// Every call is a pure function of (mock seed, request content), so reruns
/// and retries reproduce byte-identical outputs regardless of scheduling.
class MockBackend : public Backend, public Trainer {
 public:
  struct Counts {
    long complete = 0;
    long score = 0;
    long embed = 0;
    long train = 0;
    int max_in_flight = 0;
  };

  MockBackend(MockConfig cfg, std::uint64_t seed, std::string base_checkpoint,
              std::filesystem::path state_dir = {})
      : cfg_(std::move(cfg)), seed_(seed), state_dir_(std::move(state_dir)) {
    if (cfg_.phrases.empty()) cfg_.phrases = default_phrases();
    register_checkpoint(base_checkpoint, cfg_.base_quality);
    for (const auto& [id, cc] : cfg_.checkpoints) {
      register_checkpoint(id, cc.quality >= 0 ? cc.quality : cfg_.base_quality, cc.phrases);
    }
    if (!state_dir_.empty()) load_state();
  }

  void register_checkpoint(const std::string& id, double quality,
                           std::vector<std::string> phrases = {}) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& st = checkpoints_[id];
    st.quality = std::clamp(quality, 0.0, 1.0);
    if (!phrases.empty()) st.phrases = std::move(phrases);
  }

  CompletionResult complete(const CompletionRequest& req) override {
    Flight flight(*this);
    maybe_fail_or_delay(req.request_key);
    log_call("complete", req.request_key);
    counts_complete_.fetch_add(1);

    const Checkpoint st = checkpoint(req.checkpoint);
    const double v = latent_value(st, req.checkpoint, req.prompt, req.sampling.seed);

    std::string text;
    if (is_rating_prompt(req.prompt)) {
      // A rendered judge prompt: reply with the integer verdict for the
      // response text embedded in it.
      const double seen = extract_marker(rating_section(req.prompt))
                              .value_or(hash_unit({"mock", "rating", req.prompt}));
      text = "Rating: [[" + std::to_string(static_cast<int>(std::llround(10.0 * seen))) + "]]";
    } else {
      text = compose_response(st, req.checkpoint, req.prompt, req.sampling.seed, v);
    }
    return {truncate_words(text, req.sampling.max_tokens)};
  }

  OptionScoreResult score_options(const OptionScoreRequest& req) override {
    Flight flight(*this);
    maybe_fail_or_delay(req.request_key);
    if (cfg_.option_model == "none") {
      throw CapabilityError("option scoring not supported by this backend");
    }
    log_call("score", req.request_key);
    counts_score_.fetch_add(1);
    checkpoint(req.checkpoint);  // existence check

    std::vector<double> lp(req.options.size());
    if (cfg_.option_model == "uniform") {
      const double v = -std::log(static_cast<double>(req.options.size()));
      std::fill(lp.begin(), lp.end(), v);
      return {lp};
    }

    const auto values = rating_values(req.options);
    if (values) {
      // Closed rating scale: a Gaussian bump centered on the latent value the
      // response text carries. Keyed per option value, not position.
      double v = extract_marker(rating_section(req.prompt))
                     .value_or(hash_unit({"mock", "score", req.prompt}));
      if (cfg_.judge_noise > 0) {
        Rng rng(derive_seed(seed_, {"jnoise", req.checkpoint, req.prompt}));
        v = std::clamp(v + cfg_.judge_noise * rng.normal(), 0.0, 1.0);
      }
      const double s2 = 2.0 * cfg_.dist_sigma * cfg_.dist_sigma;
      for (std::size_t i = 0; i < lp.size(); ++i) {
        const double d = (*values)[i] - 10.0 * v;
        lp[i] = -(d * d) / s2;
      }
      return {lp};
    }

    // Open option set: content-keyed pseudo-random log probabilities.
    for (std::size_t i = 0; i < lp.size(); ++i) {
      lp[i] = -6.0 * hash_unit({"mock", "opt", req.checkpoint, req.prompt, req.options[i]});
    }
    return {lp};
  }

  std::vector<double> embed(const std::string& text) override {
    Flight flight(*this);
    log_call("embed", record_id(text).substr(0, 16));
    counts_embed_.fetch_add(1);

    Rng rng(derive_seed(seed_, {"embed", text}));
    std::vector<double> v(static_cast<std::size_t>(cfg_.embed_dim));
    double norm2 = 0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm > 0) {
      for (auto& x : v) x /= norm;
    } else {
      v[0] = 1.0;
    }
    return v;
  }

  std::string train(const TrainJob& job) override {
    log_call("train", job.tag);
    counts_train_.fetch_add(1);
    checkpoint(job.base_checkpoint);

    long rows = 0;
    std::vector<std::string> digests;
    for (const auto& p : job.dataset_paths) {
      if (!std::filesystem::exists(p)) throw TrainerError("missing training dataset: " + p);
      rows += static_cast<long>(count_jsonl_records(p));
      digests.push_back(sha256_hex(read_file(p)));
    }
    if (rows == 0) throw TrainerError("training dataset is empty: " + job.tag);

    std::string key_material = to_string(job.objective);
    key_material += '\x1f' + std::to_string(job.seed);
    key_material += '\x1f' + job.base_checkpoint;
    for (const auto& d : digests) key_material += '\x1f' + d;
    const std::string id = "mock-" + job.tag + "-" + sha256_hex(key_material).substr(0, 12);

    const double jitter =
        (hash_unit({"mock", "tjitter", job.tag, std::to_string(job.seed)}) - 0.5) * 0.02;
    const double n = static_cast<double>(rows);
    const double quality = std::clamp(n / (n + cfg_.trainer_halflife) + jitter, 0.0, 1.0);

    register_checkpoint(id, quality);
    persist_checkpoint(id, quality, job);
    return id;
  }

  Counts counts() const {
    Counts c;
    c.complete = counts_complete_.load();
    c.score = counts_score_.load();
    c.embed = counts_embed_.load();
    c.train = counts_train_.load();
    c.max_in_flight = max_in_flight_seen_.load();
    return c;
  }

  double checkpoint_quality(const std::string& id) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = checkpoints_.find(id);
    if (it == checkpoints_.end()) throw ConfigError("unknown checkpoint: " + id);
    return it->second.quality;
  }

  /// Persistent call tally by type, surviving backend restarts. Only
  /// meaningful when the backend was given a state directory.
  static std::map<std::string, long> call_totals(const std::filesystem::path& state_dir) {
    std::map<std::string, long> totals;
    for (const auto& rec : load_jsonl(state_dir / "calls.jsonl")) {
      totals[rec.at("type").get<std::string>()]++;
    }
    return totals;
  }

  /// Scans trailing marker words of the form q=0.NNNN; returns the encoded
  /// value of the last one, if any.
  static std::optional<double> extract_marker(const std::string& text) {
    std::optional<double> found;
    for (std::size_t pos = 0; (pos = text.find("q=", pos)) != std::string::npos; pos += 2) {
      const std::size_t s = pos + 2;
      if (s + 6 > text.size()) continue;
      if (text[s] != '0' && text[s] != '1') continue;
      if (text[s + 1] != '.') continue;
      bool digits = true;
      for (std::size_t i = s + 2; i < s + 6; ++i) {
        digits = digits && std::isdigit(static_cast<unsigned char>(text[i]));
      }
      if (digits) found = std::strtod(text.c_str() + s, nullptr);
    }
    return found;
  }

 private:
  struct Checkpoint {
    double quality = 0;
    std::vector<std::string> phrases;  // empty -> default table
  };

  struct Flight {
    explicit Flight(MockBackend& b) : b_(b) {
      const int now = b_.in_flight_.fetch_add(1) + 1;
      int seen = b_.max_in_flight_seen_.load();
      while (now > seen && !b_.max_in_flight_seen_.compare_exchange_weak(seen, now)) {
      }
    }
    ~Flight() { b_.in_flight_.fetch_sub(1); }
    MockBackend& b_;
  };

  Checkpoint checkpoint(const std::string& id) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = checkpoints_.find(id);
    if (it == checkpoints_.end()) throw ConfigError("unknown checkpoint: " + id);
    return it->second;
  }

  double latent_value(const Checkpoint& st, const std::string& id, const std::string& prompt,
                      std::uint64_t seed) const {
    Rng rng(derive_seed(seed_, {"latent", id, prompt, std::to_string(seed)}));
    return std::clamp(st.quality * (0.5 + 0.5 * rng.unit()), 0.0, 1.0);
  }

  std::string compose_response(const Checkpoint& st, const std::string& id,
                               const std::string& prompt, std::uint64_t seed, double v) const {
    const auto& table = st.phrases.empty() ? cfg_.phrases : st.phrases;
    Rng rng(derive_seed(seed_, {"text", id, prompt, std::to_string(seed)}));
    std::string out;
    for (int i = 0; i < cfg_.response_words; ++i) {
      if (!out.empty()) out += ' ';
      out += table[rng.below(table.size())];
    }
    if (cfg_.quality_marker) {
      char marker[16];
      std::snprintf(marker, sizeof(marker), "q=%.4f", v);
      if (!out.empty()) out += ' ';
      out += marker;
    }
    return out;
  }

  static std::string truncate_words(const std::string& text, int max_tokens) {
    if (max_tokens < 1) return "";
    int words = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const bool space = text[i] == ' ';
      if (!space && !in_word) {
        in_word = true;
        ++words;
      } else if (space) {
        in_word = false;
      }
      if (words > max_tokens) return text.substr(0, i);
    }
    return text;
  }

  static bool is_rating_prompt(const std::string& prompt) {
    return prompt.find("# Response:") != std::string::npos;
  }

  static std::string rating_section(const std::string& prompt) {
    const auto pos = prompt.find("# Response:");
    return pos == std::string::npos ? prompt : prompt.substr(pos);
  }

  /// If every option is a distinct integer in [0,10] and there are 11 of
  /// them, returns the per-option numeric values.
  static std::optional<std::vector<double>> rating_values(
      const std::vector<std::string>& options) {
    if (options.size() != kScoreLevels) return std::nullopt;
    std::vector<double> vals(options.size());
    unsigned seen = 0;
    for (std::size_t i = 0; i < options.size(); ++i) {
      const std::string& o = options[i];
      if (o.empty() || o.size() > 2) return std::nullopt;
      for (char c : o) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      }
      const int v = std::stoi(o);
      if (v > 10 || (seen & (1u << v))) return std::nullopt;
      seen |= 1u << v;
      vals[i] = v;
    }
    return vals;
  }

  void maybe_fail_or_delay(const std::string& key) {
    if (cfg_.fail_first_attempts > 0) {
      std::lock_guard<std::mutex> lk(mu_);
      if (attempts_[key]++ < cfg_.fail_first_attempts) {
        throw TransientError("injected transient failure: " + key);
      }
    }
    if (cfg_.delay_ms_max > 0) {
      const auto ms = derive64({"mock", "delay", key}) % static_cast<std::uint64_t>(cfg_.delay_ms_max);
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
  }

  void log_call(const char* type, const std::string& key) {
    if (state_dir_.empty()) return;
    std::lock_guard<std::mutex> lk(log_mu_);
    if (!call_log_) {
      std::filesystem::create_directories(state_dir_);
      call_log_.emplace(state_dir_ / "calls.jsonl");
    }
    call_log_->append(json{{"type", type}, {"key", key}});
  }

  void load_state() {
    for (const auto& rec : load_jsonl(state_dir_ / "checkpoints.jsonl")) {
      register_checkpoint(rec.at("id").get<std::string>(), rec.at("quality").get<double>());
    }
  }

  void persist_checkpoint(const std::string& id, double quality, const TrainJob& job) {
    if (state_dir_.empty()) return;
    std::filesystem::create_directories(state_dir_);
    const json rec{{"id", id},
                   {"quality", quality},
                   {"tag", job.tag},
                   {"objective", to_string(job.objective)},
                   {"base", job.base_checkpoint}};
    append_jsonl(state_dir_ / "checkpoints.jsonl", std::vector<json>{rec});
  }

  static std::vector<std::string> default_phrases() {
    return {"the",    "answer",  "depends",  "on",     "careful", "analysis",
            "of",     "each",    "relevant", "detail", "consider", "first",
            "whether", "this",   "approach", "meets",  "every",   "stated",
            "goal",   "then",    "refine",   "it",     "with",    "evidence"};
  }

  MockConfig cfg_;
  std::uint64_t seed_;
  std::filesystem::path state_dir_;

  mutable std::mutex mu_;
  std::map<std::string, Checkpoint> checkpoints_;
  std::map<std::string, int> attempts_;

  std::mutex log_mu_;
  std::optional<JsonlWriter> call_log_;

  std::atomic<long> counts_complete_{0};
  std::atomic<long> counts_score_{0};
  std::atomic<long> counts_embed_{0};
  std::atomic<long> counts_train_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_seen_{0};
};

}  // namespace alignkit

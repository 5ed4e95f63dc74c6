#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "alignkit/backend.hpp"
#include "alignkit/dispatcher.hpp"
#include "alignkit/kmeans.hpp"
#include "alignkit/log.hpp"
#include "alignkit/records.hpp"
#include "alignkit/rng.hpp"
#include "alignkit/store.hpp"

namespace alignkit {

/// Canonical form used for prompt identity and deduplication: Unicode NFC,
/// leading/trailing whitespace removed, internal ASCII whitespace runs
/// collapsed to single spaces. Case is preserved; near-duplicates differing
/// only in whitespace or composition collapse to one id.
inline std::string dedup_normalize(const std::string& text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  std::string composed;
  if (U_SUCCESS(status) && nfc != nullptr) {
    const icu::UnicodeString in = icu::UnicodeString::fromUTF8(text);
    icu::UnicodeString out = nfc->normalize(in, status);
    if (U_SUCCESS(status)) {
      out.toUTF8String(composed);
    } else {
      composed = text;
    }
  } else {
    composed = text;
  }

  std::string result;
  result.reserve(composed.size());
  bool pending_space = false;
  for (char c : composed) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (ws) {
      pending_space = !result.empty();
    } else {
      if (pending_space) result += ' ';
      pending_space = false;
      result += c;
    }
  }
  return result;
}

inline int count_words(const std::string& text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_word) ++words;
    in_word = !ws;
  }
  return words;
}

inline constexpr std::string_view kFewshotHeader =
    "Here are some example prompts:\n\n";
inline constexpr std::string_view kFewshotCue = "Prompt:";

/// In-context request for one more prompt in the style of the examples:
/// a handful of exemplars (3 to 5, drawn without replacement) followed by a
/// bare cue the model is expected to continue.
inline std::string build_fewshot_context(const std::vector<std::string>& exemplars, Rng& rng) {
  if (exemplars.size() < 3) throw DataError("need at least 3 exemplar prompts");
  const std::size_t m = 3 + rng.below(3);
  const auto picks = rng.sample_indices(exemplars.size(), std::min(m, exemplars.size()));

  std::string ctx(kFewshotHeader);
  for (const auto i : picks) {
    ctx += "Prompt: ";
    ctx += exemplars[i];
    ctx += "\n\n";
  }
  ctx += kFewshotCue;
  return ctx;
}

/// First line of a completion, reduced to canonical form. Empty means the
/// completion yielded no usable prompt.
inline std::string extract_candidate(const std::string& completion) {
  std::string line = completion.substr(0, completion.find('\n'));
  std::string norm = dedup_normalize(line);
  if (norm.rfind("Prompt:", 0) == 0) {
    norm = dedup_normalize(norm.substr(7));
  }
  return norm;
}

struct SynthesisOptions {
  int target = 0;
  int attempt_factor = 20;  // attempt budget = target * attempt_factor
  int max_prompt_tokens = 2048;
  std::uint64_t seed = 0;
  SamplingParams sampling{1.0, 0.9, 256, 0};
};

/// Expands the pool with model-written prompts. Each attempt builds a fresh
/// few-shot context, samples one completion, and keeps the first line if it
/// is non-empty, within the length bound, and not a duplicate of anything
/// already in the pool or this batch. Returns only the new records; logs a
/// warning if the attempt budget runs out short of the target.
inline std::vector<PromptRecord> synthesize_prompts(
    Backend& backend, const std::string& checkpoint,
    const std::vector<std::string>& exemplars, const std::vector<PromptRecord>& existing,
    const SynthesisOptions& opt, const BackendLimits& limits) {
  std::set<std::string> seen;
  for (const auto& r : existing) seen.insert(r.id);

  std::vector<PromptRecord> fresh;
  const long budget = static_cast<long>(opt.target) * opt.attempt_factor;
  long attempt = 0;
  while (static_cast<int>(fresh.size()) < opt.target && attempt < budget) {
    const std::size_t wave = static_cast<std::size_t>(
        std::min<long>(budget - attempt, std::max(64, 4 * limits.max_in_flight)));
    const long wave_base = attempt;
    auto texts = run_batch<std::string>(wave, limits, [&](std::size_t i) {
      const std::string tag = std::to_string(wave_base + static_cast<long>(i));
      Rng ctx_rng(derive_seed(opt.seed, {"fewshot", tag}));
      CompletionRequest req;
      req.checkpoint = checkpoint;
      req.prompt = build_fewshot_context(exemplars, ctx_rng);
      req.sampling = opt.sampling;
      req.sampling.seed = derive_seed(opt.seed, {"synth", tag});
      req.request_key = "synth/" + tag;
      return extract_candidate(backend.complete(req).text);
    });
    attempt += static_cast<long>(wave);

    for (auto& text : texts) {
      if (static_cast<int>(fresh.size()) >= opt.target) break;
      if (text.empty() || count_words(text) > opt.max_prompt_tokens) continue;
      const std::string id = record_id(text);
      if (!seen.insert(id).second) continue;
      fresh.push_back(PromptRecord{id, std::move(text), PromptSource::synthetic, {}, {}});
    }
  }

  if (static_cast<int>(fresh.size()) < opt.target) {
    log_warn("prompt synthesis exhausted its attempt budget: " +
             std::to_string(fresh.size()) + "/" + std::to_string(opt.target) + " prompts");
  }
  return fresh;
}

/// The prompt pool with cluster assignments and usage folded in. Usage is
/// derived from the finalized per-round prompt lists, so a crashed round
/// never half-marks prompts as spent.
struct PromptPool {
  std::vector<PromptRecord> records;
  std::map<std::string, std::size_t> index;
  int num_clusters = 0;

  static PromptPool load(const RunDir& run) {
    PromptPool pool;
    for (auto& j : load_jsonl(run.prompts_records())) {
      PromptRecord r = PromptRecord::from_json(j);
      pool.index[r.id] = pool.records.size();
      pool.records.push_back(std::move(r));
    }
    for (auto& j : load_jsonl(run.prompts_clusters())) {
      auto it = pool.index.find(j.at("id").get<std::string>());
      if (it == pool.index.end()) continue;
      const int c = j.at("cluster").get<int>();
      pool.records[it->second].cluster_id = c;
      pool.num_clusters = std::max(pool.num_clusters, c + 1);
    }
    for (const auto& [id, round] : run.used_prompt_rounds()) {
      auto it = pool.index.find(id);
      if (it != pool.index.end()) pool.records[it->second].used_in_round = round;
    }
    return pool;
  }

  const PromptRecord& by_id(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown prompt id: " + id);
    return records[it->second];
  }

  std::size_t unused_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n += !r.used_in_round.has_value();
    return n;
  }
};

/// Cluster-diversified draw of `k` unused prompts. Each pass picks distinct
/// clusters uniformly without replacement from those still holding unused
/// prompts, then one unused prompt uniformly within each; passes repeat until
/// the quota is met or the pool runs dry (short draws are logged). Spreading
/// picks across clusters keeps rare prompt families represented far better
/// than uniform sampling over the raw pool would.
inline std::vector<std::string> diversified_sample(const PromptPool& pool, int k, Rng& rng) {
  std::vector<std::vector<std::size_t>> unused(
      static_cast<std::size_t>(std::max(pool.num_clusters, 1)));
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    const auto& r = pool.records[i];
    if (r.used_in_round.has_value()) continue;
    if (!r.cluster_id.has_value()) {
      throw DataError("prompt lacks a cluster assignment: " + r.id);
    }
    unused[static_cast<std::size_t>(*r.cluster_id)].push_back(i);
  }

  std::vector<std::string> picked;
  picked.reserve(static_cast<std::size_t>(k));
  while (static_cast<int>(picked.size()) < k) {
    std::vector<std::size_t> eligible;
    for (std::size_t c = 0; c < unused.size(); ++c) {
      if (!unused[c].empty()) eligible.push_back(c);
    }
    if (eligible.empty()) break;

    const std::size_t want = std::min<std::size_t>(
        static_cast<std::size_t>(k) - picked.size(), eligible.size());
    for (const auto ei : rng.sample_indices(eligible.size(), want)) {
      auto& bucket = unused[eligible[ei]];
      const std::size_t slot = rng.below(bucket.size());
      picked.push_back(pool.records[bucket[slot]].id);
      bucket[slot] = bucket.back();
      bucket.pop_back();
    }
  }

  if (static_cast<int>(picked.size()) < k) {
    log_warn("prompt pool exhausted: drew " + std::to_string(picked.size()) + "/" +
             std::to_string(k) + " prompts");
  }
  return picked;
}

/// Embeds every pool prompt and rewrites the embeddings file. Skipped when
/// the file already covers the pool.
inline void embed_pool(const RunDir& run, Backend& backend, const BackendLimits& limits) {
  const auto records = load_jsonl(run.prompts_records());
  if (count_jsonl_records(run.prompts_embeddings()) == records.size()) return;

  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& j : records) texts.push_back(j.at("text").get<std::string>());

  auto vecs = run_batch<std::vector<double>>(
      texts.size(), limits, [&](std::size_t i) { return backend.embed(texts[i]); });

  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += json{{"id", records[i].at("id")}, {"v", vecs[i]}}.dump();
    out += '\n';
  }
  atomic_write_file(run.prompts_embeddings(), out);
}

/// Clusters the embedded pool and rewrites assignments and centroids.
/// k = 0 picks one cluster per hundred prompts.
inline KmeansResult cluster_pool(const RunDir& run, const PoolConfig& pool_cfg,
                                 const KmeansConfig& km_cfg, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vecs;
  for (const auto& j : load_jsonl(run.prompts_embeddings())) {
    ids.push_back(j.at("id").get<std::string>());
    vecs.push_back(j.at("v").get<std::vector<double>>());
  }
  if (vecs.empty()) throw DataError("no prompt embeddings; run the embed stage first");

  KmeansOptions opt;
  opt.k = pool_cfg.k_clusters > 0
              ? pool_cfg.k_clusters
              : std::max<int>(1, static_cast<int>(vecs.size() / 100));
  opt.batch_size = km_cfg.batch_size;
  opt.tol = km_cfg.tol;
  opt.max_iters = km_cfg.max_iters;
  opt.seed = derive_seed(seed, {"kmeans"});
  KmeansResult res = kmeans(vecs, opt);

  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += json{{"id", ids[i]}, {"cluster", res.assignments[i]}}.dump();
    out += '\n';
  }
  atomic_write_file(run.prompts_clusters(), out);
  atomic_write_file(run.prompts_centroids(),
                    json{{"k", res.centroids.size()}, {"centroids", res.centroids}}.dump() + "\n");
  return res;
}

}  // namespace alignkit

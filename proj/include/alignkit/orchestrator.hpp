#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alignkit/backend.hpp"
#include "alignkit/config.hpp"
#include "alignkit/dispatcher.hpp"
#include "alignkit/http_backend.hpp"
#include "alignkit/judge.hpp"
#include "alignkit/log.hpp"
#include "alignkit/mock_backend.hpp"
#include "alignkit/promptsynth.hpp"
#include "alignkit/responsesynth.hpp"
#include "alignkit/store.hpp"

namespace alignkit {

struct DpoPairIds {
  std::string chosen_id;
  std::string rejected_id;
};

namespace detail {

inline std::size_t arg_best(const std::vector<Judgment>& judged) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < judged.size(); ++i) {
    if (judged[i].score > judged[best].score ||
        (judged[i].score == judged[best].score &&
         judged[i].response_id < judged[best].response_id)) {
      best = i;
    }
  }
  return best;
}

inline std::size_t arg_worst(const std::vector<Judgment>& judged, std::size_t excluded) {
  std::size_t worst = judged.size();
  for (std::size_t i = 0; i < judged.size(); ++i) {
    if (i == excluded) continue;
    if (worst == judged.size() || judged[i].score < judged[worst].score ||
        (judged[i].score == judged[worst].score &&
         judged[i].response_id < judged[worst].response_id)) {
      worst = i;
    }
  }
  return worst;
}

}  // namespace detail

/// Builds one preference pair from a prompt's judged responses, or nothing if
/// fewer than two were judged. The pairing rule is configurable: best against
/// worst, best against a random other (the default), or two random responses
/// ordered by score. The chosen and rejected response always differ.
inline std::optional<DpoPairIds> dpo_pair(const std::vector<Judgment>& judged, DpoMode mode,
                                          Rng& rng) {
  if (judged.size() < 2) return std::nullopt;
  std::size_t chosen = 0;
  std::size_t rejected = 0;
  switch (mode) {
    case DpoMode::best_worst:
      chosen = detail::arg_best(judged);
      rejected = detail::arg_worst(judged, chosen);
      break;
    case DpoMode::best_random: {
      chosen = detail::arg_best(judged);
      std::size_t pick = rng.below(judged.size() - 1);
      rejected = pick + (pick >= chosen ? 1 : 0);
      break;
    }
    case DpoMode::random_pair: {
      const std::size_t a = rng.below(judged.size());
      std::size_t b = rng.below(judged.size() - 1);
      b += (b >= a ? 1 : 0);
      const bool a_wins = judged[a].score > judged[b].score ||
                          (judged[a].score == judged[b].score &&
                           judged[a].response_id < judged[b].response_id);
      chosen = a_wins ? a : b;
      rejected = a_wins ? b : a;
      break;
    }
  }
  return DpoPairIds{judged[chosen].response_id, judged[rejected].response_id};
}

/// Drives the whole recipe against a run directory: seed ingestion, pool
/// growth, clustering, judge preparation, and the per-round
/// sample-judge-build-train loop. Every stage finalizes its artifact
/// atomically before the next starts, so a killed run resumes at the first
/// unfinished stage and, with the same config and seed, reproduces the exact
/// bytes it would have written in one pass.
class Orchestrator {
 public:
  Orchestrator(RunConfig cfg, RunDir run) : cfg_(std::move(cfg)), run_(std::move(run)) {
    if (cfg_.backend.kind == "mock") {
      mock_ = std::make_shared<MockBackend>(cfg_.backend.mock, cfg_.seed,
                                            cfg_.base_checkpoint, run_.mock_dir());
      backend_ = mock_;
      if (cfg_.trainer.kind == "mock") {
        trainer_ = mock_;
      } else {
        trainer_ = std::make_shared<CommandTrainer>(cfg_.trainer.command,
                                                    run_.resolve("trainer"));
      }
    } else {
      backend_ = std::make_shared<HttpBackend>(cfg_.backend.endpoint, cfg_.backend.limits);
      if (cfg_.trainer.kind != "command") {
        throw ConfigError("trainer.kind=mock requires backend.kind=mock");
      }
      trainer_ = std::make_shared<CommandTrainer>(cfg_.trainer.command,
                                                  run_.resolve("trainer"));
    }
  }

  /// Invoked after each finished stage as (round, stage). Tests inject
  /// crashes by throwing from here.
  std::function<void(int, const std::string&)> stage_hook;

  Backend& backend() { return *backend_; }
  MockBackend* mock() { return mock_.get(); }
  const RunDir& run() const { return run_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<TrainJob>& train_log() const { return train_log_; }

  /// Ingests the human seed data: the SFT pairs become the round-1 dataset,
  /// their prompts seed the pool, and the base checkpoint is registered.
  void init_seed_data() {
    auto reg = CheckpointRegistry::load(run_);
    if (!reg.base()) {
      CheckpointRef base{cfg_.base_checkpoint, CheckpointKind::base, {}, {}, {}};
      reg.add(base);
    }

    if (std::filesystem::exists(run_.dataset_path(1)) &&
        count_jsonl_records(run_.prompts_records()) > 0) {
      return;
    }

    if (cfg_.seed_data.sft_path.empty()) {
      throw ConfigError("seed_data.sft_path is required to initialize a run");
    }
    const auto sft_path = cfg_.resolve_seed_path(cfg_.seed_data.sft_path);
    const auto rows = load_jsonl(sft_path);
    if (rows.empty()) throw ConfigError("seed SFT data is empty: " + sft_path.string());

    std::string d1;
    std::vector<PromptRecord> prompts;
    std::set<std::string> seen;
    std::size_t line = 0;
    for (const auto& row : rows) {
      ++line;
      std::string prompt;
      std::string response;
      try {
        prompt = row.at("prompt").get<std::string>();
        response = row.at("response").get<std::string>();
      } catch (const json::exception&) {
        throw DataError(sft_path.string() + " line " + std::to_string(line) +
                        ": expected {prompt, response}");
      }
      d1 += json{{"prompt", prompt},
                 {"response", response},
                 {"round", 1},
                 {"objective", to_string(Objective::sft)}}
                .dump();
      d1 += '\n';
      const std::string norm = dedup_normalize(prompt);
      if (norm.empty()) continue;
      const std::string id = record_id(norm);
      if (seen.insert(id).second) {
        prompts.push_back(PromptRecord{id, norm, PromptSource::seed, {}, {}});
      }
    }
    atomic_write_file(run_.dataset_path(1), d1);

    if (count_jsonl_records(run_.prompts_records()) == 0) {
      JsonlWriter w(run_.prompts_records());
      for (const auto& p : prompts) w.append(p.to_json());
    }
    log_info("initialized run: " + std::to_string(rows.size()) + " seed pairs, " +
             std::to_string(prompts.size()) + " seed prompts");
  }

  /// Grows the pool to its target size with model-written prompts, using the
  /// seed prompts as few-shot exemplars.
  void ensure_pool() {
    const std::size_t have = count_jsonl_records(run_.prompts_records());
    if (have >= static_cast<std::size_t>(cfg_.pool.target_size)) return;
    if (have == 0) throw ConfigError("prompt pool is empty; initialize the run first");

    std::vector<PromptRecord> existing;
    std::vector<std::string> exemplars;
    for (const auto& j : load_jsonl(run_.prompts_records())) {
      PromptRecord r = PromptRecord::from_json(j);
      if (r.source == PromptSource::seed) exemplars.push_back(r.text);
      existing.push_back(std::move(r));
    }
    if (exemplars.size() < 3) {
      throw ConfigError("need at least 3 seed prompts as synthesis exemplars");
    }

    SynthesisOptions opt;
    opt.target = cfg_.pool.target_size - static_cast<int>(have);
    opt.attempt_factor = cfg_.pool.synth_attempt_factor;
    opt.max_prompt_tokens = cfg_.pool.max_prompt_tokens;
    opt.seed = derive_seed(cfg_.seed, {"promptsynth"});
    opt.sampling = cfg_.sampling;
    const auto fresh = synthesize_prompts(*backend_, cfg_.base_checkpoint, exemplars,
                                          existing, opt, cfg_.backend.limits);

    JsonlWriter w(run_.prompts_records());
    for (const auto& p : fresh) w.append(p.to_json());
    log_info("pool grown to " + std::to_string(have + fresh.size()) + " prompts");
  }

  void ensure_embeddings() { embed_pool(run_, *backend_, cfg_.backend.limits); }

  void ensure_clusters() {
    if (count_jsonl_records(run_.prompts_clusters()) ==
        count_jsonl_records(run_.prompts_records())) {
      return;
    }
    ensure_embeddings();
    const auto res = cluster_pool(run_, cfg_.pool, cfg_.kmeans, cfg_.seed);
    log_info("clustered pool into " + std::to_string(res.centroids.size()) + " clusters");
  }

  /// Trains the seed judge from the human annotations if no judge is pinned
  /// yet. The pin under checkpoints/ names the judge every later stage uses.
  void ensure_judge() {
    if (std::filesystem::exists(run_.active_judge_path())) return;
    if (cfg_.seed_data.judge_path.empty()) {
      throw ConfigError("seed_data.judge_path is required to train a judge");
    }
    const auto path = cfg_.resolve_seed_path(cfg_.seed_data.judge_path);
    const auto annotations = ingest_seed_annotations(path);
    if (annotations.empty()) throw ConfigError("judge seed data is empty: " + path.string());

    const auto tmpl = judge_template();
    std::string rows;
    for (const auto& row : judge_seed_rows(annotations, tmpl)) {
      rows += row.dump();
      rows += '\n';
    }
    atomic_write_file(run_.judge_seed_dataset(), rows);

    const std::string id =
        train({cfg_.base_checkpoint,
               {run_.judge_seed_dataset().string()},
               Objective::judge_sft,
               derive_seed(cfg_.seed, {"judge"}),
               "judge"});
    auto reg = CheckpointRegistry::load(run_);
    reg.add(CheckpointRef{id, CheckpointKind::judge, {}, {}, cfg_.base_checkpoint});
    atomic_write_file(run_.active_judge_path(), id + "\n");
    log_info("seed judge trained: " + id);
  }

  /// Upgrades the judge by self-distillation: the seed judge's real-valued
  /// verdicts over fresh model responses are rounded and taught back as
  /// direct answers, in one training pass over seed plus distilled rows.
  void distill_judge() {
    auto reg = CheckpointRegistry::load(run_);
    if (reg.first_of(CheckpointKind::judge_distilled)) return;
    ensure_judge();
    const auto responder = reg.sft_seed(1);
    if (!responder) {
      throw ConfigError("judge distillation needs the round-1 finetune; run round 1 first");
    }

    PromptPool pool = PromptPool::load(run_);
    if (pool.records.empty()) throw ConfigError("prompt pool is empty");
    const std::size_t want = std::min<std::size_t>(
        static_cast<std::size_t>(cfg_.judge.distill_pairs), pool.records.size());
    Rng rng(derive_seed(cfg_.seed, {"distill"}));
    const auto picks = rng.sample_indices(pool.records.size(), want);

    auto texts = run_batch<std::string>(
        picks.size(), cfg_.backend.limits, [&](std::size_t i) {
          const auto& p = pool.records[picks[i]];
          CompletionRequest req;
          req.checkpoint = responder->id;
          req.prompt = p.text;
          req.sampling = cfg_.sampling;
          req.sampling.seed = derive_seed(cfg_.seed, {"distill-resp", p.id});
          req.request_key = "distill/" + p.id;
          return backend_->complete(req).text;
        });

    std::vector<DistillPair> pairs(picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) {
      pairs[i] = {pool.records[picks[i]].text, texts[i]};
    }
    const auto tmpl = judge_template();
    std::string rows;
    for (const auto& row : self_distill_rows(*backend_, active_judge(), tmpl, pairs,
                                             cfg_.sampling, cfg_.backend.limits)) {
      rows += row.dump();
      rows += '\n';
    }
    atomic_write_file(run_.judge_distill_dataset(), rows);

    const std::string base = cfg_.judge.distill_from == "judge" ? active_judge()
                                                                : cfg_.base_checkpoint;
    const std::string id = train({base,
                                  {run_.judge_seed_dataset().string(),
                                   run_.judge_distill_dataset().string()},
                                  Objective::judge_sft,
                                  derive_seed(cfg_.seed, {"judge-distill"}),
                                  "judge-distilled"});
    reg = CheckpointRegistry::load(run_);
    reg.add(CheckpointRef{id, CheckpointKind::judge_distilled, {}, {}, base});
    atomic_write_file(run_.active_judge_path(), id + "\n");
    log_info("distilled judge trained: " + id);
  }

  /// Runs one round to completion, or up to the named stage ("prompts",
  /// "responses", "judgments", "dataset", "train"). Round 1 finetunes the
  /// base model on the seed pairs twice with different training seeds; later
  /// rounds sample unused prompts, collect responses from the checkpoint mix,
  /// judge them, build the round dataset, and retrain from base on all
  /// datasets so far.
  void run_round(int round, const std::string& until = "train") {
    if (round < 1 || round > cfg_.rounds.r_rounds) {
      throw UsageError("round must be in 1.." + std::to_string(cfg_.rounds.r_rounds));
    }
    if (auto m = run_.load_manifest(round); m && m->status == "complete") {
      log_info("round " + std::to_string(round) + " already complete");
      return;
    }
    if (round == 1) {
      run_initial_sft();
      return;
    }
    if (auto m = run_.load_manifest(round - 1); !m || m->status != "complete") {
      throw UsageError("round " + std::to_string(round - 1) + " has not completed");
    }

    ensure_pool();
    ensure_clusters();
    ensure_judge();
    if (cfg_.judge.distill) distill_judge();

    // Stage 1: pick this round's prompts (never reusing earlier rounds').
    std::vector<std::string> prompt_ids;
    if (auto existing = run_.load_round_prompts(round)) {
      prompt_ids = std::move(*existing);
    } else {
      PromptPool pool = PromptPool::load(run_);
      Rng rng(derive_seed(cfg_.seed, {"roundprompts", std::to_string(round)}));
      prompt_ids = diversified_sample(pool, cfg_.rounds.k_prompts, rng);
      if (prompt_ids.empty()) throw DataError("no unused prompts left in the pool");
      run_.write_round_prompts(round, prompt_ids);
    }
    hook(round, "prompts");
    if (until == "prompts") return;

    PromptPool pool = PromptPool::load(run_);
    std::vector<std::pair<std::string, std::string>> prompts;
    prompts.reserve(prompt_ids.size());
    for (const auto& id : prompt_ids) prompts.emplace_back(id, pool.by_id(id).text);

    auto reg = CheckpointRegistry::load(run_);
    const auto checkpoint_refs = round_checkpoint_set(reg, round);
    std::vector<std::string> checkpoints;
    for (const auto& ref : checkpoint_refs) checkpoints.push_back(ref.id);

    // Stage 2: responses from the checkpoint mix.
    if (!run_.stage_done(round, "responses")) {
      const auto records = sample_responses(
          *backend_, prompts, checkpoints, cfg_.rounds.n_responses, cfg_.sampling,
          derive_seed(cfg_.seed, {"responses", std::to_string(round)}),
          cfg_.backend.limits);
      std::filesystem::create_directories(run_.responses_path(round).parent_path());
      std::filesystem::remove(run_.responses_path(round));
      JsonlWriter w(run_.responses_path(round));
      for (const auto& r : records) w.append(r.to_json());
      run_.write_stage_marker(round, "responses", json{{"count", records.size()}});
      log_progress("round " + std::to_string(round) + " responses", records.size(),
                   records.size());
    }
    hook(round, "responses");
    if (until == "responses") return;

    // Stage 3: judge every response.
    if (!run_.stage_done(round, "judgments")) {
      std::vector<JudgeItem> items;
      for (const auto& j : load_jsonl(run_.responses_path(round))) {
        ResponseRecord r = ResponseRecord::from_json(j);
        items.push_back({r.id, pool.by_id(r.prompt_id).text, r.text});
      }
      const auto judged = judge_responses(*backend_, active_judge(), judge_template(),
                                          items, cfg_.sampling, cfg_.backend.limits);
      std::filesystem::create_directories(run_.judgments_path(round).parent_path());
      std::filesystem::remove(run_.judgments_path(round));
      JsonlWriter w(run_.judgments_path(round));
      for (const auto& g : judged) w.append(g.to_json());
      run_.write_stage_marker(round, "judgments", json{{"count", judged.size()}});
      log_progress("round " + std::to_string(round) + " judgments", judged.size(),
                   judged.size());
    }
    hook(round, "judgments");
    if (until == "judgments") return;

    // Stage 4: the round dataset.
    if (!std::filesystem::exists(run_.dataset_path(round))) {
      build_round_dataset(round, prompt_ids, pool);
    }
    hook(round, "dataset");
    if (until == "dataset") return;

    // Stage 5: retrain from base on every dataset so far.
    std::vector<std::string> rel_inputs;
    std::vector<std::string> abs_inputs;
    for (int r = 1; r <= round; ++r) {
      rel_inputs.push_back(RunDir::rel_dataset(r));
      abs_inputs.push_back(run_.dataset_path(r).string());
    }
    TrainJob job{cfg_.base_checkpoint, abs_inputs, cfg_.rounds.objective,
                 derive_seed(cfg_.seed, {"train", std::to_string(round)}),
                 "round-" + std::to_string(round)};
    const std::string id = train(job);
    reg = CheckpointRegistry::load(run_);
    reg.add(CheckpointRef{id, CheckpointKind::round, {}, round, cfg_.base_checkpoint});

    RoundManifest m;
    m.round = round;
    m.prompt_ids = prompt_ids;
    m.dataset_path = RunDir::rel_dataset(round);
    m.training_inputs = rel_inputs;
    m.base_checkpoint = cfg_.base_checkpoint;
    m.output_checkpoint = id;
    m.config_digest = cfg_.digest;
    m.rng_seed = cfg_.seed;
    m.training_invocation = json::array({json{{"tag", job.tag},
                                              {"objective", to_string(job.objective)},
                                              {"seed", job.seed},
                                              {"base", job.base_checkpoint},
                                              {"datasets", rel_inputs},
                                              {"output", id}}});
    m.validate();
    run_.write_manifest(m);
    hook(round, "train");
    log_info("round " + std::to_string(round) + " complete: " + id);
  }

  void run_pipeline() {
    init_seed_data();
    for (int r = 1; r <= cfg_.rounds.r_rounds; ++r) run_round(r);
  }

  json status() const {
    const std::size_t pool_n = count_jsonl_records(run_.prompts_records());
    PromptPool pool;
    std::size_t unused = 0;
    if (pool_n > 0) {
      pool = PromptPool::load(run_);
      unused = pool.unused_count();
    }
    auto reg = CheckpointRegistry::load(run_);
    json checkpoints = json::array();
    for (const auto& ref : reg.all()) checkpoints.push_back(ref.to_json());

    json rounds = json::array();
    for (int r = 1; r <= cfg_.rounds.r_rounds; ++r) {
      if (auto m = run_.load_manifest(r)) {
        rounds.push_back(json{{"round", r},
                              {"status", m->status},
                              {"output_checkpoint", m->output_checkpoint},
                              {"dataset_rows", count_jsonl_records(run_.dataset_path(r))}});
      }
    }

    std::string judge;
    if (std::filesystem::exists(run_.active_judge_path())) {
      judge = read_file(run_.active_judge_path());
      while (!judge.empty() && judge.back() == '\n') judge.pop_back();
    }

    return json{{"pool", json{{"prompts", pool_n},
                              {"unused", unused},
                              {"clusters", pool.num_clusters}}},
                {"rounds", rounds},
                {"rounds_complete", run_.completed_rounds()},
                {"checkpoints", checkpoints},
                {"active_judge", judge}};
  }

 private:
  void run_initial_sft() {
    if (!std::filesystem::exists(run_.dataset_path(1))) {
      init_seed_data();
    }
    auto reg = CheckpointRegistry::load(run_);
    json invocations = json::array();
    std::array<std::string, 2> ids;
    for (int i = 1; i <= 2; ++i) {
      if (auto existing = reg.sft_seed(i)) {
        ids[static_cast<std::size_t>(i - 1)] = existing->id;
        continue;
      }
      TrainJob job{cfg_.base_checkpoint,
                   {run_.dataset_path(1).string()},
                   Objective::sft,
                   derive_seed(cfg_.seed, {"sft", std::to_string(i)}),
                   "sft-" + std::to_string(i)};
      const std::string id = train(job);
      reg.add(CheckpointRef{id, CheckpointKind::sft_seed, i, {}, cfg_.base_checkpoint});
      ids[static_cast<std::size_t>(i - 1)] = id;
      invocations.push_back(json{{"tag", job.tag},
                                 {"objective", to_string(job.objective)},
                                 {"seed", job.seed},
                                 {"base", job.base_checkpoint},
                                 {"datasets", json::array({RunDir::rel_dataset(1)})},
                                 {"output", id}});
    }

    RoundManifest m;
    m.round = 1;
    m.dataset_path = RunDir::rel_dataset(1);
    m.training_inputs = {RunDir::rel_dataset(1)};
    m.base_checkpoint = cfg_.base_checkpoint;
    m.output_checkpoint = ids[0];
    m.aux_checkpoints = {ids[1]};
    m.config_digest = cfg_.digest;
    m.rng_seed = cfg_.seed;
    m.training_invocation = invocations;
    m.validate();
    run_.write_manifest(m);
    hook(1, "train");
    log_info("round 1 complete: " + ids[0] + ", " + ids[1]);
  }

  void build_round_dataset(int round, const std::vector<std::string>& prompt_ids,
                           const PromptPool& pool) {
    std::map<std::string, ResponseRecord> responses;
    for (const auto& j : load_jsonl(run_.responses_path(round))) {
      ResponseRecord r = ResponseRecord::from_json(j);
      responses[r.id] = std::move(r);
    }
    std::map<std::string, std::vector<Judgment>> by_prompt;
    for (const auto& j : load_jsonl(run_.judgments_path(round))) {
      Judgment g = Judgment::from_json(j);
      auto it = responses.find(g.response_id);
      if (it == responses.end()) {
        throw DataError("judgment references unknown response: " + g.response_id);
      }
      by_prompt[it->second.prompt_id].push_back(std::move(g));
    }

    const Objective objective = cfg_.rounds.objective;
    std::string rows;
    std::vector<std::string> dropped;
    for (const auto& prompt_id : prompt_ids) {
      auto it = by_prompt.find(prompt_id);
      if (it == by_prompt.end() || it->second.empty()) {
        dropped.push_back(prompt_id);
        continue;
      }
      const auto& judged = it->second;

      if (objective == Objective::bofn_sft) {
        const Judgment& best = best_of_n_select(judged);
        TrainingExample ex{prompt_id, best.response_id, {}, round, Objective::bofn_sft};
        ex.validate();
        rows += json{{"prompt_id", prompt_id},
                     {"prompt", pool.by_id(prompt_id).text},
                     {"chosen_id", best.response_id},
                     {"response", responses.at(best.response_id).text},
                     {"score", best.score},
                     {"round", round},
                     {"objective", to_string(Objective::bofn_sft)}}
                    .dump();
        rows += '\n';
      } else {
        Rng rng(derive_seed(cfg_.seed, {"dpo", std::to_string(round), prompt_id}));
        const auto pair = dpo_pair(judged, cfg_.rounds.dpo_mode, rng);
        if (!pair) {
          dropped.push_back(prompt_id);
          continue;
        }
        TrainingExample ex{prompt_id, pair->chosen_id, pair->rejected_id, round,
                           Objective::dpo};
        ex.validate();
        rows += json{{"prompt_id", prompt_id},
                     {"prompt", pool.by_id(prompt_id).text},
                     {"chosen_id", pair->chosen_id},
                     {"response", responses.at(pair->chosen_id).text},
                     {"rejected_id", pair->rejected_id},
                     {"rejected", responses.at(pair->rejected_id).text},
                     {"round", round},
                     {"objective", to_string(Objective::dpo)}}
                    .dump();
        rows += '\n';
      }
    }
    if (!dropped.empty()) {
      log_warn("round " + std::to_string(round) + " dropped " +
               std::to_string(dropped.size()) + " prompts with too few judged responses");
      atomic_write_file(run_.dropped_prompts_path(round),
                        json{{"round", round}, {"dropped", dropped}}.dump() + "\n");
    }
    if (rows.empty()) throw DataError("round dataset would be empty");
    atomic_write_file(run_.dataset_path(round), rows);
  }

  std::string train(const TrainJob& job) {
    train_log_.push_back(job);
    const std::string id = trainer_->train(job);
    if (id.empty()) throw TrainerError("trainer returned an empty checkpoint id");
    return id;
  }

  JudgeTemplate judge_template() const {
    if (cfg_.judge.template_path) {
      return JudgeTemplate(read_file(cfg_.resolve_seed_path(*cfg_.judge.template_path)));
    }
    return JudgeTemplate();
  }

  std::string active_judge() const {
    if (!std::filesystem::exists(run_.active_judge_path())) {
      throw ConfigError("no judge has been trained yet");
    }
    std::string id = read_file(run_.active_judge_path());
    while (!id.empty() && (id.back() == '\n' || id.back() == ' ')) id.pop_back();
    if (id.empty()) throw DataError("active judge pin is empty");
    return id;
  }

  void hook(int round, const std::string& stage) {
    if (stage_hook) stage_hook(round, stage);
  }

  RunConfig cfg_;
  RunDir run_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<Trainer> trainer_;
  std::shared_ptr<MockBackend> mock_;
  std::vector<TrainJob> train_log_;
};

}  // namespace alignkit

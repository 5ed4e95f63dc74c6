#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alignkit/errors.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/records.hpp"
#include "alignkit/version.hpp"

namespace alignkit {

namespace fs = std::filesystem;

/// Exclusive advisory lock over a whole run directory. The CLI takes one for
/// every stateful verb, making the process the single writer for the run.
class RunLock {
 public:
  explicit RunLock(const fs::path& lock_path) {
    fd_ = ::open(lock_path.c_str(), O_WRONLY | O_CREAT, 0644);
    if (fd_ < 0) throw DataError("cannot open run lock: " + lock_path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw DataError("run directory is locked by another process: " + lock_path.string());
    }
  }
  RunLock(RunLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;
  ~RunLock() {
    if (fd_ >= 0) ::close(fd_);
  }

 private:
  int fd_ = -1;
};

/// Filesystem layout of one run. Everything the pipeline persists lives under
/// this root; all recorded paths are relative to it.
///
///   prompts/records.jsonl       prompt pool (append-only)
///   prompts/embeddings.jsonl    one embedding per prompt id
///   prompts/clusters.jsonl      prompt id -> cluster assignment
///   prompts/centroids.json      centroid matrix + clustering metadata
///   responses/round-{r}/records.jsonl
///   judgments/round-{r}/records.jsonl
///   datasets/d{r}               training rows for round r (JSONL)
///   datasets/judge-seed         judge SFT rows from seed annotations
///   datasets/judge-distill      judge self-distillation rows
///   manifests/round-{r}         round manifest (JSON)
///   checkpoints/registry.jsonl  every checkpoint ref ever produced
///   stage/round-{r}/            per-stage artifacts for resumability
///   reports/                    analysis output
///   mock/                       deterministic mock backend state
class RunDir {
 public:
  static RunDir init(const fs::path& root) {
    fs::create_directories(root);
    const fs::path version_file = root / "LAYOUT";
    if (fs::exists(version_file)) {
      check_version(version_file);
    } else {
      atomic_write_file(version_file, std::string(kLayoutVersion) + "\n");
    }
    for (const char* d : {"prompts", "responses", "judgments", "datasets", "manifests",
                          "checkpoints", "stage", "reports"}) {
      fs::create_directories(root / d);
    }
    return RunDir(root);
  }

  static RunDir open(const fs::path& root) {
    const fs::path version_file = root / "LAYOUT";
    if (!fs::exists(version_file)) {
      throw ConfigError("not a run directory (missing LAYOUT): " + root.string());
    }
    check_version(version_file);
    return RunDir(root);
  }

  const fs::path& root() const { return root_; }

  RunLock lock() const { return RunLock(root_ / ".lock"); }

  // Relative layout paths (the documented contract).
  static std::string rel_dataset(int r) { return "datasets/d" + std::to_string(r); }
  static std::string rel_manifest(int r) { return "manifests/round-" + std::to_string(r); }
  static std::string rel_responses(int r) {
    return "responses/round-" + std::to_string(r) + "/records.jsonl";
  }
  static std::string rel_judgments(int r) {
    return "judgments/round-" + std::to_string(r) + "/records.jsonl";
  }

  fs::path resolve(const std::string& rel) const { return root_ / rel; }

  fs::path prompts_records() const { return root_ / "prompts" / "records.jsonl"; }
  fs::path prompts_embeddings() const { return root_ / "prompts" / "embeddings.jsonl"; }
  fs::path prompts_clusters() const { return root_ / "prompts" / "clusters.jsonl"; }
  fs::path prompts_centroids() const { return root_ / "prompts" / "centroids.json"; }
  fs::path responses_path(int r) const { return root_ / rel_responses(r); }
  fs::path judgments_path(int r) const { return root_ / rel_judgments(r); }
  fs::path dataset_path(int r) const { return root_ / rel_dataset(r); }
  fs::path judge_seed_dataset() const { return root_ / "datasets" / "judge-seed"; }
  fs::path judge_distill_dataset() const { return root_ / "datasets" / "judge-distill"; }
  fs::path manifest_path(int r) const { return root_ / rel_manifest(r); }
  fs::path registry_path() const { return root_ / "checkpoints" / "registry.jsonl"; }
  fs::path active_judge_path() const { return root_ / "checkpoints" / "active-judge"; }
  fs::path stage_dir(int r) const { return root_ / "stage" / ("round-" + std::to_string(r)); }
  fs::path round_prompts_path(int r) const { return stage_dir(r) / "prompts.json"; }
  fs::path stage_marker(int r, const std::string& stage) const {
    return stage_dir(r) / (stage + ".done");
  }
  fs::path dropped_prompts_path(int r) const { return stage_dir(r) / "dropped.json"; }
  fs::path pipeline_stage_dir() const { return root_ / "stage" / "pipeline"; }
  fs::path reports_dir() const { return root_ / "reports"; }
  fs::path mock_dir() const { return root_ / "mock"; }

  bool has_manifest(int r) const { return fs::exists(manifest_path(r)); }

  std::optional<RoundManifest> load_manifest(int r) const {
    if (!has_manifest(r)) return std::nullopt;
    return RoundManifest::from_json(json::parse(read_file(manifest_path(r))));
  }

  void write_manifest(const RoundManifest& m) const {
    m.validate();
    atomic_write_file(manifest_path(m.round), m.to_json().dump(2) + "\n");
  }

  /// Highest r such that rounds 1..r all have a complete manifest.
  int completed_rounds() const {
    int r = 0;
    while (true) {
      auto m = load_manifest(r + 1);
      if (!m || m->status != "complete") break;
      ++r;
    }
    return r;
  }

  void write_stage_marker(int r, const std::string& stage, const json& info) const {
    atomic_write_file(stage_marker(r, stage), info.dump() + "\n");
  }

  bool stage_done(int r, const std::string& stage) const {
    return fs::exists(stage_marker(r, stage));
  }

  void write_round_prompts(int r, const std::vector<std::string>& prompt_ids) const {
    atomic_write_file(round_prompts_path(r),
                      json{{"round", r}, {"prompt_ids", prompt_ids}}.dump() + "\n");
  }

  std::optional<std::vector<std::string>> load_round_prompts(int r) const {
    if (!fs::exists(round_prompts_path(r))) return std::nullopt;
    const json j = json::parse(read_file(round_prompts_path(r)));
    return j.at("prompt_ids").get<std::vector<std::string>>();
  }

  /// Union of prompt ids selected by all rounds so far, from the atomically
  /// written per-round lists. This is the usage record behind the
  /// "previously unused prompts only" rule; an id may appear in exactly one
  /// round list, and stage files are finalized by rename.
  std::vector<std::pair<std::string, int>> used_prompt_rounds() const {
    std::vector<std::pair<std::string, int>> used;
    for (int r = 2;; ++r) {
      auto ids = load_round_prompts(r);
      if (!ids) break;
      for (auto& id : *ids) used.emplace_back(id, r);
    }
    return used;
  }

 private:
  explicit RunDir(fs::path root) : root_(std::move(root)) {}

  static void check_version(const fs::path& version_file) {
    std::string v = read_file(version_file);
    while (!v.empty() && (v.back() == '\n' || v.back() == '\r')) v.pop_back();
    if (v != kLayoutVersion) {
      throw ConfigError("run layout version mismatch: found '" + v + "', engine expects '" +
                        kLayoutVersion + "'");
    }
  }

  fs::path root_;
};

/// Append-only registry of every checkpoint the run has produced or imported.
class CheckpointRegistry {
 public:
  static CheckpointRegistry load(const RunDir& run) {
    CheckpointRegistry reg;
    reg.path_ = run.registry_path();
    for (const auto& j : load_jsonl(reg.path_)) {
      reg.refs_.push_back(CheckpointRef::from_json(j));
    }
    return reg;
  }

  const std::vector<CheckpointRef>& all() const { return refs_; }

  std::optional<CheckpointRef> by_id(const std::string& id) const {
    for (const auto& r : refs_) {
      if (r.id == id) return r;
    }
    return std::nullopt;
  }

  std::optional<CheckpointRef> base() const { return first_of(CheckpointKind::base); }

  std::optional<CheckpointRef> sft_seed(int index) const {
    for (const auto& r : refs_) {
      if (r.kind == CheckpointKind::sft_seed && r.index && *r.index == index) return r;
    }
    return std::nullopt;
  }

  std::optional<CheckpointRef> round(int r) const {
    for (const auto& c : refs_) {
      if (c.kind == CheckpointKind::round && c.round && *c.round == r) return c;
    }
    return std::nullopt;
  }

  std::optional<CheckpointRef> first_of(CheckpointKind kind) const {
    for (const auto& r : refs_) {
      if (r.kind == kind) return r;
    }
    return std::nullopt;
  }

  /// Appends unless an identical id is already present (idempotent resume).
  void add(const CheckpointRef& ref) {
    ref.validate();
    if (by_id(ref.id)) return;
    append_jsonl(path_, std::vector<json>{ref.to_json()});
    refs_.push_back(ref);
  }

 private:
  fs::path path_;
  std::vector<CheckpointRef> refs_;
};

}  // namespace alignkit

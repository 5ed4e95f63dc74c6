#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "alignkit/backend.hpp"
#include "alignkit/dispatcher.hpp"
#include "alignkit/records.hpp"
#include "alignkit/store.hpp"

namespace alignkit {

/// Splits `total` units across members proportionally to `ratios`, exactly.
/// Each member gets the floor of its quota; leftover units go to the largest
/// fractional remainders, earlier members winning ties. Equal ratios therefore
/// yield counts differing by at most one, biased toward the front.
inline std::vector<int> allocate(int total, const std::vector<double>& ratios) {
  if (ratios.empty()) throw DataError("allocate: no members");
  double sum = 0;
  for (double r : ratios) {
    if (r < 0) throw DataError("allocate: negative ratio");
    sum += r;
  }
  if (sum <= 0) throw DataError("allocate: ratios sum to zero");
  if (total < 0) throw DataError("allocate: negative total");

  std::vector<int> counts(ratios.size(), 0);
  std::vector<double> remainders(ratios.size(), 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double quota = static_cast<double>(total) * ratios[i] / sum;
    counts[i] = static_cast<int>(quota);
    remainders[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }

  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    counts[order[i]]++;
    ++assigned;
  }
  return counts;
}

/// The checkpoints a round samples from: both initial finetunes, plus from
/// round 3 on the previous round's model. Responses are split equally among
/// them, mixing the stable early policies with the newest one.
inline std::vector<CheckpointRef> round_checkpoint_set(const CheckpointRegistry& reg,
                                                       int round) {
  if (round < 2) throw DataError("response sampling starts at round 2");
  const auto s1 = reg.sft_seed(1);
  const auto s2 = reg.sft_seed(2);
  if (!s1 || !s2) throw DataError("initial finetunes are missing; run round 1 first");
  std::vector<CheckpointRef> out{*s1, *s2};
  if (round >= 3) {
    const auto prev = reg.round(round - 1);
    if (!prev) {
      throw DataError("checkpoint for round " + std::to_string(round - 1) + " is missing");
    }
    out.push_back(*prev);
  }
  return out;
}

/// Samples `n_per_prompt` responses for every prompt, split across the given
/// checkpoints by equal-ratio allocation. Records come back in (prompt,
/// checkpoint, slot) order with derived per-response seeds, so the output is
/// identical however the calls were scheduled.
inline std::vector<ResponseRecord> sample_responses(
    Backend& backend, const std::vector<std::pair<std::string, std::string>>& prompts,
    const std::vector<std::string>& checkpoints, int n_per_prompt,
    const SamplingParams& sampling, std::uint64_t seed, const BackendLimits& limits) {
  if (checkpoints.empty()) throw DataError("no checkpoints to sample from");
  const std::vector<double> ones(checkpoints.size(), 1.0);

  struct Job {
    std::size_t prompt;
    std::size_t checkpoint;
    int slot;
  };
  std::vector<Job> jobs;
  jobs.reserve(prompts.size() * static_cast<std::size_t>(n_per_prompt));
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    const auto counts = allocate(n_per_prompt, ones);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      for (int slot = 0; slot < counts[c]; ++slot) jobs.push_back({p, c, slot});
    }
  }

  auto texts = run_batch<std::string>(jobs.size(), limits, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto& [prompt_id, prompt_text] = prompts[job.prompt];
    CompletionRequest req;
    req.checkpoint = checkpoints[job.checkpoint];
    req.prompt = prompt_text;
    req.sampling = sampling;
    req.sampling.seed =
        derive_seed(seed, {"resp", prompt_id, req.checkpoint, std::to_string(job.slot)});
    req.request_key = "resp/" + prompt_id + "/" + req.checkpoint + "/" +
                      std::to_string(job.slot);
    return backend.complete(req).text;
  });

  std::vector<ResponseRecord> records;
  records.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    ResponseRecord rec;
    rec.prompt_id = prompts[job.prompt].first;
    rec.checkpoint_id = checkpoints[job.checkpoint];
    rec.text = texts[i];
    rec.sampling = sampling;
    rec.sampling.seed = derive_seed(
        seed, {"resp", rec.prompt_id, rec.checkpoint_id, std::to_string(job.slot)});
    rec.id = ResponseRecord::make_id(rec.prompt_id, rec.checkpoint_id, rec.sampling.seed,
                                     rec.text);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace alignkit

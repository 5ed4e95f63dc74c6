#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alignkit/backend.hpp"
#include "alignkit/dispatcher.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/log.hpp"
#include "alignkit/records.hpp"

namespace alignkit {

inline constexpr std::string_view kDefaultJudgeTemplate =
    R"TPL(Please act as an impartial judge and evaluate the quality of the response provided by an AI assistant to the user question displayed below. Your evaluation should consider factors such as the helpfulness, relevance, accuracy, depth, creativity, and level of detail of the response. Please just rate the response on a scale of 0 to 10 by strictly following this format: \"[[rating]]\", for example: \"Rating: [[3]]\".

# Prompt:
{prompt}

# Response:
{response}
)TPL";

/// Short names for the eleven grade levels, lowest to highest.
inline constexpr std::array<std::string_view, kScoreLevels> kScaleLabels = {
    "Unusable",      "Extremely Poor", "Very Poor",  "Poor",      "Below Average",
    "Average",       "Satisfactory",   "Good",       "Very Good", "Excellent",
    "Outstanding"};

/// Grading prompt with {prompt} and {response} slots. Rendering substitutes
/// both slots against the original template in one pass, so placeholder-like
/// text inside the graded content is never re-expanded.
class JudgeTemplate {
 public:
  JudgeTemplate() : JudgeTemplate(std::string(kDefaultJudgeTemplate)) {}

  explicit JudgeTemplate(std::string text) : text_(std::move(text)) {
    prompt_at_ = find_once("{prompt}");
    response_at_ = find_once("{response}");
  }

  const std::string& text() const { return text_; }

  std::string render(const std::string& prompt, const std::string& response) const {
    const std::size_t first = std::min(prompt_at_, response_at_);
    const std::size_t second = std::max(prompt_at_, response_at_);
    const std::string& first_val = prompt_at_ < response_at_ ? prompt : response;
    const std::string& second_val = prompt_at_ < response_at_ ? response : prompt;
    const std::size_t first_len = prompt_at_ < response_at_ ? 8 : 10;
    const std::size_t second_len = prompt_at_ < response_at_ ? 10 : 8;

    std::string out;
    out.reserve(text_.size() + prompt.size() + response.size());
    out.append(text_, 0, first);
    out += first_val;
    out.append(text_, first + first_len, second - (first + first_len));
    out += second_val;
    out.append(text_, second + second_len, std::string::npos);
    return out;
  }

 private:
  std::size_t find_once(std::string_view needle) const {
    const std::size_t at = text_.find(needle);
    if (at == std::string::npos) {
      throw ConfigError("judge template is missing the " + std::string(needle) +
                        " placeholder");
    }
    if (text_.find(needle, at + 1) != std::string::npos) {
      throw ConfigError("judge template contains " + std::string(needle) +
                        " more than once");
    }
    return at;
  }

  std::string text_;
  std::size_t prompt_at_ = 0;
  std::size_t response_at_ = 0;
};

inline std::vector<std::string> rating_options() {
  std::vector<std::string> opts;
  opts.reserve(kScoreLevels);
  for (std::size_t i = 0; i < kScoreLevels; ++i) opts.push_back(std::to_string(i));
  return opts;
}

/// Turns raw per-option log probabilities over the grades 0..10 into a
/// normalized distribution and its probability-weighted mean grade. Computed
/// as sum(i * e_i) / sum(e_i) after subtracting the max, so a point mass
/// scores exactly its grade, a uniform spread scores exactly 5, and adding a
/// constant to every log probability changes nothing.
inline Judgment judgment_from_logprobs(const std::string& response_id,
                                       const std::vector<double>& logprobs,
                                       const std::string& judge_checkpoint) {
  if (logprobs.size() != kScoreLevels) {
    throw DataError("expected " + std::to_string(kScoreLevels) + " grade log probabilities, got " +
                    std::to_string(logprobs.size()));
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw DataError("grade log probability is not a finite value or -inf");
    }
    max_lp = std::max(max_lp, lp);
  }
  if (max_lp == -std::numeric_limits<double>::infinity()) {
    throw DataError("all grade log probabilities are -inf");
  }

  std::array<double, kScoreLevels> weights{};
  double sum = 0;
  double dot = 0;
  for (std::size_t i = 0; i < kScoreLevels; ++i) {
    weights[i] = std::exp(logprobs[i] - max_lp);
    sum += weights[i];
    dot += static_cast<double>(i) * weights[i];
  }

  Judgment j;
  j.response_id = response_id;
  j.judge_checkpoint = judge_checkpoint;
  for (std::size_t i = 0; i < kScoreLevels; ++i) j.dist[i] = weights[i] / sum;
  j.score = dot / sum;
  return j;
}

/// First [[integer]] verdict in a judge completion. Out-of-scale values are
/// clamped with a warning; a completion with no verdict at all is an error.
inline int parse_rating(const std::string& text) {
  for (std::size_t pos = 0; (pos = text.find("[[", pos)) != std::string::npos; pos += 2) {
    std::size_t i = pos + 2;
    bool neg = false;
    if (i < text.size() && text[i] == '-') {
      neg = true;
      ++i;
    }
    const std::size_t digits_at = i;
    long value = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      value = value * 10 + (text[i] - '0');
      ++i;
    }
    if (i == digits_at) continue;
    if (i + 1 >= text.size() || text[i] != ']' || text[i + 1] != ']') continue;
    if (neg) value = -value;
    if (value < 0 || value > 10) {
      log_warn("judge verdict " + std::to_string(value) + " is outside 0..10; clamping");
      value = std::clamp<long>(value, 0, 10);
    }
    return static_cast<int>(value);
  }
  throw DataError("judge completion contains no [[rating]] verdict: " + text.substr(0, 200));
}

inline int round_half_up_clamped(double score) {
  return static_cast<int>(std::clamp(std::floor(score + 0.5), 0.0, 10.0));
}

/// Scores one rendered grading prompt. Prefers closed-set grade scoring for a
/// real-valued result; if the backend cannot score fixed options, falls back
/// to sampling a completion and reading the integer verdict as a point mass.
inline Judgment real_value_score(Backend& backend, const std::string& judge_checkpoint,
                                 const std::string& rendered, const std::string& response_id,
                                 const SamplingParams& sampling) {
  static std::atomic<bool> warned{false};
  OptionScoreRequest req{judge_checkpoint, rendered, rating_options(),
                         "judge/" + response_id};
  try {
    return judgment_from_logprobs(response_id, backend.score_options(req).logprobs,
                                  judge_checkpoint);
  } catch (const CapabilityError&) {
    if (!warned.exchange(true)) {
      log_warn("backend cannot score grade options; falling back to integer verdicts");
    }
  }

  CompletionRequest creq;
  creq.checkpoint = judge_checkpoint;
  creq.prompt = rendered;
  creq.sampling = sampling;
  creq.sampling.temperature = 0.0;
  creq.sampling.seed = derive64({"judge-fallback", response_id});
  creq.request_key = "judge-int/" + response_id;
  const int rating = parse_rating(backend.complete(creq).text);

  Judgment j;
  j.response_id = response_id;
  j.judge_checkpoint = judge_checkpoint;
  j.dist.fill(0.0);
  j.dist[static_cast<std::size_t>(rating)] = 1.0;
  j.score = rating;
  return j;
}

struct JudgeItem {
  std::string response_id;
  std::string prompt_text;
  std::string response_text;
};

inline std::vector<Judgment> judge_responses(Backend& backend,
                                             const std::string& judge_checkpoint,
                                             const JudgeTemplate& tmpl,
                                             const std::vector<JudgeItem>& items,
                                             const SamplingParams& sampling,
                                             const BackendLimits& limits) {
  return run_batch<Judgment>(items.size(), limits, [&](std::size_t i) {
    const auto& item = items[i];
    return real_value_score(backend, judge_checkpoint,
                            tmpl.render(item.prompt_text, item.response_text),
                            item.response_id, sampling);
  });
}

/// Highest score wins; exact ties go to the smallest response id so the
/// winner never depends on input order.
inline const Judgment& best_of_n_select(const std::vector<Judgment>& judged) {
  if (judged.empty()) throw DataError("best-of-n over an empty judgment set");
  const Judgment* best = &judged[0];
  for (const auto& j : judged) {
    if (j.score > best->score ||
        (j.score == best->score && j.response_id < best->response_id)) {
      best = &j;
    }
  }
  return *best;
}

struct SeedAnnotation {
  std::string prompt;
  std::string response;
  int score = 0;
};

/// Reads human-graded (prompt, response, score) triplets. Scores must be
/// integers in 0..10; anything else is rejected with its line number.
inline std::vector<SeedAnnotation> ingest_seed_annotations(const std::filesystem::path& path) {
  std::vector<SeedAnnotation> out;
  std::size_t line = 0;
  for (const auto& j : load_jsonl(path)) {
    ++line;
    SeedAnnotation a;
    try {
      a.prompt = j.at("prompt").get<std::string>();
      a.response = j.at("response").get<std::string>();
      a.score = j.at("score").get<int>();
    } catch (const json::exception&) {
      throw DataError(path.string() + " line " + std::to_string(line) +
                      ": expected {prompt, response, score}");
    }
    if (!j.at("score").is_number_integer()) {
      throw DataError(path.string() + " line " + std::to_string(line) +
                      ": score is not an integer");
    }
    if (a.score < 0 || a.score > 10) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": score " +
                      std::to_string(a.score) + " is outside 0..10");
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::string rating_reply(int score) {
  return "Rating: [[" + std::to_string(score) + "]]";
}

/// Training rows for the seed judge: each annotation becomes a rendered
/// grading prompt paired with the verbatim verdict reply.
inline std::vector<json> judge_seed_rows(const std::vector<SeedAnnotation>& annotations,
                                         const JudgeTemplate& tmpl) {
  std::vector<json> rows;
  rows.reserve(annotations.size());
  for (const auto& a : annotations) {
    rows.push_back(json{{"prompt", tmpl.render(a.prompt, a.response)},
                        {"response", rating_reply(a.score)},
                        {"score", a.score}});
  }
  return rows;
}

struct DistillPair {
  std::string prompt;
  std::string response;
};

/// Self-distillation rows: the current judge grades each pair with the
/// real-valued path, and the row teaches the rounded verdict directly while
/// keeping the teacher's full distribution alongside for inspection.
inline std::vector<json> self_distill_rows(Backend& backend, const std::string& judge_checkpoint,
                                           const JudgeTemplate& tmpl,
                                           const std::vector<DistillPair>& pairs,
                                           const SamplingParams& sampling,
                                           const BackendLimits& limits) {
  std::vector<JudgeItem> items;
  items.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    items.push_back({"distill/" + std::to_string(i), pairs[i].prompt, pairs[i].response});
  }
  const auto judged = judge_responses(backend, judge_checkpoint, tmpl, items, sampling, limits);

  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int rounded = round_half_up_clamped(judged[i].score);
    rows.push_back(json{{"prompt", tmpl.render(pairs[i].prompt, pairs[i].response)},
                        {"response", rating_reply(rounded)},
                        {"teacher_dist", judged[i].dist},
                        {"teacher_score", judged[i].score},
                        {"rounded_score", rounded}});
  }
  return rows;
}

}  // namespace alignkit

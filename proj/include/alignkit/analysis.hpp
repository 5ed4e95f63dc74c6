#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alignkit/config.hpp"
#include "alignkit/jsonl.hpp"
#include "alignkit/records.hpp"
#include "alignkit/store.hpp"

namespace alignkit {

struct CurvePoint {
  int n = 0;
  double mean_best = 0.0;
};

/// Mean best score across prompts when only the first n of each prompt's
/// responses are considered, for each requested n. This is the scaling curve
/// of selection quality in the number of samples.
inline std::vector<CurvePoint> bestofn_curve(
    const std::vector<std::vector<double>>& per_prompt_scores, const std::vector<int>& ns) {
  if (per_prompt_scores.empty()) throw DataError("best-of-n curve over no prompts");
  for (const auto& scores : per_prompt_scores) {
    if (scores.empty()) throw DataError("best-of-n curve: prompt with no scores");
  }
  std::vector<CurvePoint> curve;
  curve.reserve(ns.size());
  for (int n : ns) {
    if (n < 1) throw DataError("best-of-n curve: n must be >= 1");
    double total = 0;
    for (const auto& scores : per_prompt_scores) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), scores.size());
      total += *std::max_element(scores.begin(), scores.begin() + take);
    }
    curve.push_back({n, total / static_cast<double>(per_prompt_scores.size())});
  }
  return curve;
}

/// True when every row's product lies within `tol` of the rows' mean product.
/// Used to check that alternative (per-round, rounds) plans spend the same
/// total budget.
inline bool budget_within_tolerance(const std::vector<std::pair<double, double>>& rows,
                                    double tol = 0.01) {
  if (rows.empty()) throw DataError("budget check over no rows");
  std::vector<double> products;
  products.reserve(rows.size());
  double mean = 0;
  for (const auto& [a, b] : rows) {
    products.push_back(a * b);
    mean += a * b;
  }
  mean /= static_cast<double>(rows.size());
  if (mean <= 0) return false;
  for (double p : products) {
    if (std::abs(p - mean) > tol * mean) return false;
  }
  return true;
}

/// Judged scores of one round grouped per prompt, in stored response order.
inline std::vector<std::vector<double>> round_score_matrix(const RunDir& run, int round) {
  std::map<std::string, double> score_of;
  for (const auto& j : load_jsonl(run.judgments_path(round))) {
    const Judgment g = Judgment::from_json(j);
    score_of[g.response_id] = g.score;
  }
  std::map<std::string, std::size_t> order;
  std::vector<std::vector<double>> matrix;
  for (const auto& j : load_jsonl(run.responses_path(round))) {
    const ResponseRecord r = ResponseRecord::from_json(j);
    const auto it = score_of.find(r.id);
    if (it == score_of.end()) continue;
    auto [slot, fresh] = order.try_emplace(r.prompt_id, matrix.size());
    if (fresh) matrix.emplace_back();
    matrix[slot->second].push_back(it->second);
  }
  if (matrix.empty()) {
    throw DataError("round " + std::to_string(round) + " has no judged responses");
  }
  return matrix;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace detail

/// Best-of-n scaling curve for one round's stored responses and judgments.
/// Writes reports/curve-round-<r>.txt and .json; returns the JSON form.
inline json curve_report(const RunDir& run, int round, const std::vector<int>& ns) {
  const auto curve = bestofn_curve(round_score_matrix(run, round), ns);

  json points = json::array();
  std::string text = "best-of-n scaling, round " + std::to_string(round) + "\n";
  text += "n\tmean_best_score\n";
  for (const auto& p : curve) {
    points.push_back(json{{"n", p.n}, {"mean_best", p.mean_best}});
    text += std::to_string(p.n) + "\t" + detail::fixed4(p.mean_best) + "\n";
  }
  const json out{{"round", round}, {"points", points}};

  std::filesystem::create_directories(run.reports_dir());
  const std::string stem = "curve-round-" + std::to_string(round);
  atomic_write_file(run.reports_dir() / (stem + ".json"), out.dump(2) + "\n");
  atomic_write_file(run.reports_dir() / (stem + ".txt"), text);
  return out;
}

/// Round-by-round progression: dataset sizes, mean judged score, and mean
/// score of the kept responses. Writes reports/progression.txt and .json;
/// returns the JSON form.
inline json progression_report(const RunDir& run, const RunConfig& cfg) {
  json rounds = json::array();
  std::string text = "round\tstatus\tdataset_rows\tmean_score\tmean_chosen\toutput\n";

  for (int r = 1; r <= cfg.rounds.r_rounds; ++r) {
    const auto m = run.load_manifest(r);
    if (!m) continue;

    json row{{"round", r},
             {"status", m->status},
             {"output_checkpoint", m->output_checkpoint},
             {"dataset_rows", count_jsonl_records(run.dataset_path(r))}};

    std::string mean_str = "-";
    std::string chosen_str = "-";
    if (r >= 2 && std::filesystem::exists(run.judgments_path(r))) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& j : load_jsonl(run.judgments_path(r))) {
        sum += j.at("score").get<double>();
        ++n;
      }
      if (n > 0) {
        row["mean_score"] = sum / static_cast<double>(n);
        mean_str = detail::fixed4(sum / static_cast<double>(n));
      }
      double chosen_sum = 0;
      std::size_t chosen_n = 0;
      for (const auto& j : load_jsonl(run.dataset_path(r))) {
        if (j.contains("score")) {
          chosen_sum += j.at("score").get<double>();
          ++chosen_n;
        }
      }
      if (chosen_n > 0) {
        row["mean_chosen_score"] = chosen_sum / static_cast<double>(chosen_n);
        chosen_str = detail::fixed4(chosen_sum / static_cast<double>(chosen_n));
      }
    }
    rounds.push_back(row);
    text += std::to_string(r) + "\t" + m->status + "\t" +
            std::to_string(count_jsonl_records(run.dataset_path(r))) + "\t" + mean_str +
            "\t" + chosen_str + "\t" + m->output_checkpoint + "\n";
  }

  const json out{{"rounds", rounds}};
  std::filesystem::create_directories(run.reports_dir());
  atomic_write_file(run.reports_dir() / "progression.json", out.dump(2) + "\n");
  atomic_write_file(run.reports_dir() / "progression.txt", text);
  return out;
}

}  // namespace alignkit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "alignkit/errors.hpp"
#include "alignkit/rng.hpp"

namespace alignkit {

struct KmeansOptions {
  int k = 1;
  int batch_size = 4096;  // >= n switches to full-batch Lloyd iterations
  double tol = 1e-4;      // relative objective improvement below which we stop
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct KmeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignments;
  std::vector<double> objective_trace;  // accepted states only, non-increasing
  int iterations = 0;
};

namespace detail {

inline double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

inline int nearest_centroid(const std::vector<double>& point,
                            const std::vector<std::vector<double>>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = detail::dist2(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace detail {

inline std::vector<std::vector<double>> plus_plus_init(
    const std::vector<std::vector<double>>& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(points[rng.below(n)]);

  std::vector<double> d2min(n);
  for (std::size_t i = 0; i < n; ++i) d2min[i] = dist2(points[i], centroids[0]);

  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0;
    for (double d : d2min) total += d;
    std::size_t pick;
    if (total <= 0) {
      // All remaining mass is on already-chosen points (duplicates).
      pick = rng.below(n);
    } else {
      double target = rng.unit() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2min[i];
        if (target <= 0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2min[i] = std::min(d2min[i], dist2(points[i], centroids.back()));
    }
  }
  return centroids;
}

inline double assign_all(const std::vector<std::vector<double>>& points,
                         const std::vector<std::vector<double>>& centroids,
                         std::vector<int>& assignments) {
  double obj = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = dist2(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignments[i] = best;
    obj += best_d;
  }
  return obj / static_cast<double>(points.size());
}

// Recompute each centroid as the mean of its members; an empty cluster is
// reseeded onto the point currently farthest from its assigned centroid.
inline void update_means(const std::vector<std::vector<double>>& points,
                         const std::vector<int>& assignments,
                         std::vector<std::vector<double>>& centroids) {
  const std::size_t dim = points[0].size();
  std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& s = sums[static_cast<std::size_t>(assignments[i])];
    for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
    counts[static_cast<std::size_t>(assignments[i])]++;
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] != 0) continue;
    std::size_t far_i = 0;
    double far_d = -1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = dist2(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
      if (d > far_d) {
        far_d = d;
        far_i = i;
      }
    }
    centroids[c] = points[far_i];
  }
}

}  // namespace detail

/// K-means with D^2-weighted seeding. Runs full Lloyd iterations when
/// batch_size covers the dataset, otherwise mini-batch updates with a
/// keep-best rule: a step that worsens the full objective is rolled back, so
/// the recorded trace is non-increasing in both modes. The objective is the
/// mean squared distance of points to their assigned centroid.
inline KmeansResult kmeans(const std::vector<std::vector<double>>& points,
                           const KmeansOptions& opt) {
  const std::size_t n = points.size();
  if (n == 0) throw DataError("kmeans: empty dataset");
  if (opt.k < 1) throw DataError("kmeans: k must be >= 1");
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DataError("kmeans: inconsistent point dimensions");
  }
  const int k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opt.k), n));

  Rng rng(opt.seed);
  KmeansResult res;
  res.centroids = detail::plus_plus_init(points, k, rng);
  res.assignments.assign(n, 0);

  const bool full_batch = static_cast<std::size_t>(opt.batch_size) >= n;
  double best_obj = detail::assign_all(points, res.centroids, res.assignments);
  res.objective_trace.push_back(best_obj);

  if (full_batch) {
    for (int it = 0; it < opt.max_iters; ++it) {
      res.iterations = it + 1;
      detail::update_means(points, res.assignments, res.centroids);
      const double obj = detail::assign_all(points, res.centroids, res.assignments);
      res.objective_trace.push_back(obj);
      if (best_obj - obj <= opt.tol * (best_obj + 1e-12)) {
        best_obj = std::min(best_obj, obj);
        break;
      }
      best_obj = obj;
    }
    return res;
  }

  auto best_centroids = res.centroids;
  std::vector<std::size_t> member_counts(static_cast<std::size_t>(k), 1);
  std::vector<int> batch_assign;
  int stalls = 0;
  for (int it = 0; it < opt.max_iters && stalls < 5; ++it) {
    res.iterations = it + 1;
    const auto batch = rng.sample_indices(n, static_cast<std::size_t>(opt.batch_size));
    batch_assign.resize(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      batch_assign[b] = nearest_centroid(points[batch[b]], res.centroids);
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& c = res.centroids[static_cast<std::size_t>(batch_assign[b])];
      const double lr = 1.0 / static_cast<double>(++member_counts[static_cast<std::size_t>(batch_assign[b])]);
      const auto& p = points[batch[b]];
      for (std::size_t d = 0; d < dim; ++d) c[d] += lr * (p[d] - c[d]);
    }
    const double obj = detail::assign_all(points, res.centroids, res.assignments);
    if (obj < best_obj * (1.0 - opt.tol)) {
      best_obj = obj;
      best_centroids = res.centroids;
      res.objective_trace.push_back(obj);
      stalls = 0;
    } else if (obj < best_obj) {
      best_obj = obj;
      best_centroids = res.centroids;
      res.objective_trace.push_back(obj);
      ++stalls;
    } else {
      res.centroids = best_centroids;
      ++stalls;
    }
  }
  res.centroids = best_centroids;
  detail::assign_all(points, res.centroids, res.assignments);
  return res;
}

}  // namespace alignkit

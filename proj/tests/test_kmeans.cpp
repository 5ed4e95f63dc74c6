#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "alignkit/kmeans.hpp"
#include "alignkit/rng.hpp"

using namespace alignkit;

namespace {

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = rng.normal();
  }
  return pts;
}

double brute_objective(const std::vector<std::vector<double>>& pts,
                       const std::vector<std::vector<double>>& centroids) {
  double s = 0;
  for (const auto& p : pts) {
    s += detail::dist2(p, centroids[static_cast<std::size_t>(nearest_centroid(p, centroids))]);
  }
  return s / static_cast<double>(pts.size());
}

}  // namespace

TEST_CASE("two well-separated pairs collapse to their midpoints") {
  const std::vector<std::vector<double>> pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  KmeansOptions opt;
  opt.k = 2;
  opt.seed = 3;
  auto res = kmeans(pts, opt);
  REQUIRE(res.centroids.size() == 2);

  std::vector<std::vector<double>> got = res.centroids;
  std::sort(got.begin(), got.end());
  CHECK(got[0][0] == Catch::Approx(0.0));
  CHECK(got[0][1] == Catch::Approx(0.5));
  CHECK(got[1][0] == Catch::Approx(10.0));
  CHECK(got[1][1] == Catch::Approx(0.5));

  CHECK(res.assignments[0] == res.assignments[1]);
  CHECK(res.assignments[2] == res.assignments[3]);
  CHECK(res.assignments[0] != res.assignments[2]);
}

TEST_CASE("full-batch objective traces never increase") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pts = random_points(120, 5, 1000 + seed);
    KmeansOptions opt;
    opt.k = 7;
    opt.batch_size = 4096;  // >= n: full-batch updates
    opt.seed = seed;
    const auto res = kmeans(pts, opt);
    REQUIRE(res.objective_trace.size() >= 1);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("mini-batch objective traces never increase") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pts = random_points(300, 4, 2000 + seed);
    KmeansOptions opt;
    opt.k = 6;
    opt.batch_size = 32;
    opt.seed = seed;
    const auto res = kmeans(pts, opt);
    REQUIRE(res.objective_trace.size() >= 1);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("final assignments agree with brute-force nearest centroids") {
  const auto pts = random_points(150, 3, 77);
  for (int batch : {4096, 40}) {
    KmeansOptions opt;
    opt.k = 5;
    opt.batch_size = batch;
    opt.seed = 9;
    const auto res = kmeans(pts, opt);
    REQUIRE(res.assignments.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const int want = nearest_centroid(pts[i], res.centroids);
      CHECK(detail::dist2(pts[i], res.centroids[static_cast<std::size_t>(res.assignments[i])]) ==
            Catch::Approx(detail::dist2(pts[i], res.centroids[static_cast<std::size_t>(want)])));
    }
    CHECK(res.objective_trace.back() == Catch::Approx(brute_objective(pts, res.centroids)));
  }
}

TEST_CASE("k larger than the dataset is clamped") {
  const std::vector<std::vector<double>> pts{{1, 1}, {2, 2}, {3, 3}};
  KmeansOptions opt;
  opt.k = 10;
  opt.seed = 1;
  const auto res = kmeans(pts, opt);
  CHECK(res.centroids.size() == 3);
  CHECK(res.objective_trace.back() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("duplicate points do not break seeding or updates") {
  std::vector<std::vector<double>> pts(40, std::vector<double>{1.0, -2.0});
  pts.push_back({5.0, 5.0});
  KmeansOptions opt;
  opt.k = 3;
  opt.seed = 4;
  const auto res = kmeans(pts, opt);
  REQUIRE(res.centroids.size() == 3);
  for (int a : res.assignments) {
    CHECK(a >= 0);
    CHECK(a < 3);
  }
  CHECK(res.objective_trace.back() == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(kmeans({}, KmeansOptions{}), DataError);

  KmeansOptions bad;
  bad.k = 0;
  CHECK_THROWS_AS(kmeans({{1.0}}, bad), DataError);

  CHECK_THROWS_AS(kmeans({{1.0, 2.0}, {1.0}}, KmeansOptions{.k = 1}), DataError);
}

TEST_CASE("identical seeds reproduce identical clusterings") {
  const auto pts = random_points(200, 6, 5);
  KmeansOptions opt;
  opt.k = 8;
  opt.batch_size = 64;
  opt.seed = 42;
  const auto a = kmeans(pts, opt);
  const auto b = kmeans(pts, opt);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  CHECK(a.objective_trace == b.objective_trace);
}

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "alignkit/dispatcher.hpp"
#include "alignkit/hash.hpp"

using namespace alignkit;

namespace {

BackendLimits limits_with(int in_flight, int retries = 3) {
  BackendLimits l;
  l.max_in_flight = in_flight;
  l.retry_limit = retries;
  l.retry_backoff_ms = {1, 2};
  return l;
}

}  // namespace

TEST_CASE("results come back in index order under scrambled scheduling") {
  const std::size_t n = 64;
  auto out = run_batch<int>(n, limits_with(8), [](std::size_t i) {
    const auto ms = derive64({"scramble", std::to_string(i)}) % 5;
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    return static_cast<int>(i * 10);
  });
  REQUIRE(out.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == static_cast<int>(i * 10));
}

TEST_CASE("concurrency never exceeds the configured bound") {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  run_batch<int>(100, limits_with(4), [&](std::size_t) {
    const int now = in_flight.fetch_add(1) + 1;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    in_flight.fetch_sub(1);
    return 0;
  });
  CHECK(peak.load() <= 4);
  CHECK(peak.load() >= 2);
}

TEST_CASE("transient failures are retried until the limit") {
  std::mutex mu;
  std::map<std::size_t, int> attempts;
  auto out = run_batch<int>(10, limits_with(3, 2), [&](std::size_t i) {
    int attempt;
    {
      std::lock_guard<std::mutex> lk(mu);
      attempt = attempts[i]++;
    }
    if (i == 4 && attempt < 2) throw TransientError("flaky");
    return static_cast<int>(i);
  });
  CHECK(out[4] == 4);
  CHECK(attempts[4] == 3);
  CHECK(attempts[5] == 1);
}

TEST_CASE("exhausted retries surface the transient error") {
  std::atomic<int> calls{0};
  CHECK_THROWS_AS(run_batch<int>(3, limits_with(2, 1),
                                 [&](std::size_t i) -> int {
                                   if (i == 1) {
                                     calls.fetch_add(1);
                                     throw TransientError("always down");
                                   }
                                   return 0;
                                 }),
                  TransientError);
  CHECK(calls.load() == 2);  // first attempt + one retry
}

TEST_CASE("the lowest failing index decides the reported error") {
  for (int trial = 0; trial < 5; ++trial) {
    try {
      run_batch<int>(32, limits_with(8, 0), [&](std::size_t i) -> int {
        const auto ms = derive64({"err", std::to_string(trial), std::to_string(i)}) % 3;
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        if (i == 3) throw BackendError("failed at 3");
        if (i == 17) throw BackendError("failed at 17");
        return 0;
      });
      FAIL("expected an error");
    } catch (const BackendError& e) {
      CHECK(std::string(e.what()) == "failed at 3");
    }
  }
}

TEST_CASE("an empty batch is a no-op") {
  const auto out = run_batch<int>(0, limits_with(4), [](std::size_t) { return 1; });
  CHECK(out.empty());
}

TEST_CASE("non-transient errors are not retried") {
  std::atomic<int> calls{0};
  CHECK_THROWS_AS(run_batch<int>(1, limits_with(1, 5),
                                 [&](std::size_t) -> int {
                                   calls.fetch_add(1);
                                   throw BackendError("hard failure");
                                 }),
                  BackendError);
  CHECK(calls.load() == 1);
}

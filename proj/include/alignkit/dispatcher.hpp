#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "alignkit/config.hpp"
#include "alignkit/errors.hpp"

namespace alignkit {

/// Runs `work(i)` for i in [0, n) across at most `limits.max_in_flight`
/// threads. TransientErrors are retried up to `limits.retry_limit` times with
/// the configured backoff schedule (the last entry repeats). Results come back
/// in index order regardless of completion order. If any item fails
/// permanently, the error for the lowest failing index is rethrown after all
/// in-flight work drains.
template <class Result>
std::vector<Result> run_batch(std::size_t n, const BackendLimits& limits,
                              const std::function<Result(std::size_t)>& work,
                              const std::function<void(std::size_t)>& on_done = {}) {
  std::vector<Result> results(n);
  if (n == 0) return results;

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(limits.max_in_flight), n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::size_t err_index = n;
  std::exception_ptr err;

  auto backoff_for = [&](int attempt) {
    if (limits.retry_backoff_ms.empty()) return 0;
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(attempt),
                                                limits.retry_backoff_ms.size() - 1);
    return limits.retry_backoff_ms[i];
  };

  auto run_one = [&](std::size_t i) {
    for (int attempt = 0;; ++attempt) {
      try {
        results[i] = work(i);
        if (on_done) on_done(i);
        return;
      } catch (const TransientError&) {
        if (attempt >= limits.retry_limit) throw;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_for(attempt)));
      }
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        run_one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (err) std::rethrow_exception(err);
  return results;
}

}  // namespace alignkit

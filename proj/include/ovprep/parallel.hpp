// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

namespace ovprep {

/// Applies fn to every input on up to `jobs` threads. Results come back in
/// input order regardless of scheduling. The first exception thrown by fn is
/// rethrown after all workers finish.
template <typename In, typename Fn>
auto ordered_parallel_map(std::span<const In> inputs, int jobs, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, const In&>> {
  using Out = std::invoke_result_t<Fn&, const In&>;
  std::vector<Out> results(inputs.size());
  const auto workers = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
      jobs, 1, static_cast<std::ptrdiff_t>(std::max<std::size_t>(inputs.size(), 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) results[i] = fn(inputs[i]);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1)) {
      try {
        results[i] = fn(inputs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace ovprep

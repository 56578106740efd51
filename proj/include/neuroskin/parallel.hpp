#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace neuroskin {

/// Calls fn(i) for every i in [0, count) on at most `workers` threads and
/// returns the results in index order. If any call throws, the exception of
/// the lowest failing index is rethrown after all calls finish, so the
/// outcome never depends on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, std::size_t workers, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> results(count);
  std::vector<std::exception_ptr> errors(count);
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), count);

  auto run = [&](std::size_t i) {
    try {
      results[i] = fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) run(i);
      });
    }
  }  // jthreads join here

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace neuroskin

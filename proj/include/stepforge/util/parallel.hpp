#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace stepforge::util {

/// Result slot for parallel_map: either a value or the exception it threw.
template <typename R>
struct Outcome {
  std::optional<R> value;
  std::exception_ptr error;

  bool ok() const { return value.has_value(); }
};

/// Applies fn to every item on at most `workers` threads. Results keep input
/// order, so output is independent of scheduling.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, std::size_t workers, Fn fn)
    -> std::vector<Outcome<decltype(fn(items.front(), std::size_t{}))>> {
  using R = decltype(fn(items.front(), std::size_t{}));
  std::vector<Outcome<R>> out(items.size());
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        out[i].value.emplace(fn(items[i], i));
      } catch (...) {
        out[i].error = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(items.size(), 1));
  if (workers == 1) {
    run();
    return out;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  return out;
}

}  // namespace stepforge::util

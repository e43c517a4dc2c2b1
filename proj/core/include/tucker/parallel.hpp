#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace tucker {

/// Worker count: hardware concurrency, capped by TUCKER_THREADS when set.
std::size_t worker_count();

/// Runs job(0..n-1) on up to worker_count() threads. The first exception
/// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

/// Results are stored by index, so their order never depends on scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& fn) {
  std::vector<std::optional<T>> slots(n);
  parallel_for(n, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace tucker

#pragma once

#include <cstddef>
#include <future>
#include <vector>

namespace smjp::detail {

/// Evaluates fn(0..n-1) on up to `threads` workers; results come back in index
/// order so reductions over them do not depend on scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned threads, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<R>> pending;
  std::size_t next = 0;
  while (next < n || !pending.empty()) {
    while (next < n && pending.size() < threads) {
      pending.push_back(std::async(std::launch::async, fn, next));
      ++next;
    }
    out.push_back(pending.front().get());
    pending.erase(pending.begin());
  }
  return out;
}

}  // namespace smjp::detail

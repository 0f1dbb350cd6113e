#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace driftscope {

// Runs fn(i) for i in [0, n) on up to `parallelism` threads. Each thread owns
// one contiguous block of indices, so any per-index output is independent of
// scheduling. If several calls throw, the exception from the lowest block is
// rethrown after all threads join.
template <class Fn>
void ParallelFor(size_t n, size_t parallelism, Fn&& fn) {
  const size_t workers = std::clamp<size_t>(parallelism, 1, std::max<size_t>(n, 1));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = n * w / workers;
    const size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        for (size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace driftscope

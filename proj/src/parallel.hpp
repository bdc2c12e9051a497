#pragma once

#include "rriokr/common.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace rriokr::detail {

// Runs body(i) for i in [0, n), split into contiguous chunks over
// thread_count() workers. Callers must write disjoint outputs per i.
template <class Body>
void parallel_for(Index n, Body&& body) {
  const Index workers =
      std::min<Index>(std::max(1, thread_count()), std::max<Index>(n, 1));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (Index i = begin; i < end; ++i) body(i);
    });
  }
}

}  // namespace rriokr::detail

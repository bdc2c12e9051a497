#include "rriokr/common.hpp"
#include "rriokr/random.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>

extern "C" void openblas_set_num_threads(int num_threads);

namespace rriokr {

namespace {
std::atomic<int> g_threads{1};
}  // namespace

void set_thread_count(int threads) {
  require(threads >= 1, ErrorKind::usage, "thread count must be at least 1");
  g_threads.store(threads);
  // BLAS stays serial so results do not depend on the worker count.
  openblas_set_num_threads(1);
}

int thread_count() { return g_threads.load(); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal_(engine_);
  return out;
}

std::vector<Index> Rng::permutation(Index n) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), engine_);
  return perm;
}

}  // namespace rriokr

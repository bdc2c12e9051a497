#pragma once

#include "rriokr/common.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace rriokr {

// Derives an independent stream seed from (seed, tag) with the splitmix64
// finalizer so that sub-computations never share a generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  // n×d matrix of iid standard normals, filled row by row.
  Matrix normal_matrix(Index rows, Index cols);

  // Uniformly random permutation of 0..n-1.
  std::vector<Index> permutation(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rriokr

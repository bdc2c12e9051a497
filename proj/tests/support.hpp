#pragma once

#include "rriokr/common.hpp"
#include "rriokr/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>

namespace testing {

using rriokr::Index;
using rriokr::Matrix;
using rriokr::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  rriokr::Rng rng(seed);
  return rng.normal_matrix(rows, cols);
}

inline Matrix random_binary(Index rows, Index cols, std::uint64_t seed, double p = 0.3) {
  rriokr::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng.engine()) < p ? 1.0 : 0.0;
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline double relative_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return max_abs_diff(a, b) / scale;
}

// Explicit feature-space ridge regression with linear kernels:
// coefficients B (d_x × d_y) of min (1/n)|X B - Y|^2 + lambda |B|^2.
inline Matrix explicit_ridge(const Matrix& x, const Matrix& y, double lambda) {
  const auto n = static_cast<double>(x.rows());
  Matrix a = x.transpose() * x;
  a.diagonal().array() += n * lambda;
  return a.ldlt().solve(x.transpose() * y);
}

// Top-p eigenvectors (columns, descending) of a symmetric matrix, computed
// with Eigen's own solver so the oracle does not share code with the library.
inline Matrix top_eigenvectors(const Matrix& a, Index p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  const Index d = a.rows();
  Matrix out(d, p);
  for (Index l = 0; l < p; ++l) out.col(l) = es.eigenvectors().col(d - 1 - l);
  return out;
}

inline Vector eigenvalues_desc(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

}  // namespace testing

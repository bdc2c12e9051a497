#pragma once

#include "rriokr/common.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace rriokr {

// Eigenpairs of a symmetric matrix, eigenvalues in descending order. Each
// eigenvector's first non-negligible component is positive.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
  Index source_dim = 0;

  // Number of eigenvalues above rel_cutoff * eigenvalues(0).
  Index effective_rank(double rel_cutoff = kRelativeCutoff) const;
};

// The input is symmetrized as (A + A^T) / 2 before decomposition.
SpectralDecomposition eigh(const Matrix& a);

// Descending eigenvalues only.
Vector eigvalsh(const Matrix& a);

// V f(Lambda) V^T with f(l) = l^exponent above rel_cutoff * l_max and 0
// below (so exponent 0 yields the projector onto the range of A).
Matrix matrix_power(const Matrix& a, double exponent,
                    double rel_cutoff = kRelativeCutoff);

// Squared operator norm |(M + tI)^{-1/2} H|^2, i.e. the largest eigenvalue
// of H^T (M + tI)^{-1} H.
double shifted_whitened_norm(const Matrix& m, const Matrix& h, double t);

struct ProfilePoint {
  double t = 0.0;
  double value = 0.0;
};

// shifted_whitened_norm(M, H, t) over a grid, sharing one eigendecomposition
// of M. Passing (C, H^T) yields the input source-condition profile
// |H (C + t)^{-1/2}|^2.
std::vector<ProfilePoint> source_condition_profile(const Matrix& m, const Matrix& h,
                                                   const std::vector<double>& t_grid);

// `count` log-spaced points from hi down to lo (descending).
std::vector<double> log_grid(double lo, double hi, int count);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double r_squared = 0.0;
  Index points = 0;
};

// Least-squares line through (log t, log value) over the fraction
// [window.first, window.second] of the profile's log-t range.
SlopeFit fit_loglog_slope(const std::vector<ProfilePoint>& profile,
                          std::pair<double, double> window = {0.2, 0.8});

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
// columns of Q sign-corrected by diag(R).
Matrix haar_orthogonal(Index d, std::uint64_t seed);

}  // namespace rriokr

#pragma once

#include "rriokr/common.hpp"

#include <span>
#include <string>
#include <string_view>

namespace rriokr {

enum class KernelFamily {
  gaussian,
  linear,
  gaussian_tanimoto,
};

// A scalar positive-definite kernel. Widths are validated at construction.
//
//   gaussian:           exp(-|a-b|^2 / (2 sigma2))
//   linear:             <a, b>
//   gaussian_tanimoto:  exp(-(1 - T(a, b)) / sigma2), T the Tanimoto
//                       coefficient of two binary vectors (T = 1 when both
//                       are all-zero).
class KernelSpec {
 public:
  static KernelSpec gaussian(double sigma2);
  static KernelSpec linear();
  static KernelSpec gaussian_tanimoto(double sigma2);

  // Accepts "linear", "gaussian:<sigma2>" and "tanimoto:<sigma2>".
  static KernelSpec parse(std::string_view text);

  KernelFamily family() const { return family_; }
  double sigma2() const { return sigma2_; }

  // Inverse of parse(); round-trips exactly.
  std::string to_string() const;

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec(KernelFamily family, double sigma2)
      : family_(family), sigma2_(sigma2) {}

  KernelFamily family_ = KernelFamily::linear;
  double sigma2_ = 0.0;
};

double eval_kernel(const KernelSpec& spec, std::span<const double> a,
                   std::span<const double> b);

// Pairwise kernel evaluations. Points are the rows of the input matrices.
struct GramMatrix {
  Matrix entries;
  KernelSpec kernel = KernelSpec::linear();
  bool symmetric = false;

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }
};

// Symmetric Gram of a point set with itself: the upper triangle is evaluated
// and mirrored, so entries(i, j) == entries(j, i) bit for bit.
GramMatrix gram(const KernelSpec& spec, const Matrix& points);

// Cross Gram, entries(i, j) = k(rows_i, cols_j).
GramMatrix gram(const KernelSpec& spec, const Matrix& rows, const Matrix& cols);

// k(z, z) for every row of `points`.
Vector self_kernel(const KernelSpec& spec, const Matrix& points);

}  // namespace rriokr

#pragma once

#include "rriokr/common.hpp"
#include "rriokr/kernels.hpp"
#include "rriokr/spectral.hpp"

#include <cstdint>
#include <vector>

namespace rriokr {

// Trained kernel ridge regression in the separable vv-RKHS k(x, x') I.
//
// Prediction is implicit: h(x) = sum_i alpha_i(x) psi(y_i) with
// alpha(x) = W k_x. For the exact estimator W = (K_x + n lambda I)^{-1} and
// k_x holds kernel values against all n training inputs; for the Nystrom
// estimator W is n×m and k_x holds kernel values against the m anchors.
class RidgeModel {
 public:
  RidgeModel() = default;
  RidgeModel(Matrix w, double lambda, KernelSpec kernel, std::vector<Index> anchors = {});

  const Matrix& ridge_inverse() const { return w_; }
  double lambda() const { return lambda_; }
  const KernelSpec& kernel() const { return kernel_; }
  Index size() const { return w_.rows(); }
  bool is_nystrom() const { return !anchors_.empty(); }
  // Training rows used as anchors (empty for the exact estimator).
  const std::vector<Index>& anchors() const { return anchors_; }
  // Length expected from kernel columns passed to coefficients().
  Index column_size() const { return w_.cols(); }

  // alpha(x) = W k_x for one kernel column.
  Vector coefficients(const Vector& k_x) const;
  // Batch form: one kernel column per test point, result n × n_test.
  Matrix coefficients(const Matrix& k_x) const;

 private:
  Matrix w_;
  double lambda_ = 0.0;
  KernelSpec kernel_ = KernelSpec::linear();
  std::vector<Index> anchors_;
};

// W = (K_x + n lambda I)^{-1} via a Cholesky factorization of the shifted
// system.
RidgeModel fit_krr(const GramMatrix& k_x, double lambda);

// alpha(x) = W k_x.
inline Vector predict_coefficients(const RidgeModel& model, const Vector& k_x) {
  return model.coefficients(k_x);
}

// Eigendecomposition of K_x reused across a whole lambda grid. Equivalent to
// fit_krr for each lambda, without refactorizing.
class RidgePath {
 public:
  explicit RidgePath(const GramMatrix& k_x);
  // With the linear kernel and fewer features than rows, the basis is the
  // thin left singular basis of x (n × d); K_x has no mass outside it.
  RidgePath(const GramMatrix& k_x, const Matrix& x);

  Index size() const { return basis_.rows(); }
  // n × r with orthonormal columns, r = n unless the path is thin.
  const Matrix& basis() const { return basis_; }
  const Vector& spectrum() const { return spectrum_; }

  // 1 / (s_i + n lambda) in the eigenbasis of K_x.
  Vector filter(double lambda) const;
  RidgeModel model(double lambda) const;

 private:
  Matrix basis_;
  Vector spectrum_;
  KernelSpec kernel_;
};

struct NystromConfig {
  Index anchors = 0;
  std::uint64_t seed = 0;
};

// m training indices drawn uniformly without replacement, sorted.
std::vector<Index> select_anchors(Index n, const NystromConfig& cfg);

// Nystrom KRR restricted to the span of the anchors:
//   alpha(x) = K_nm (K_nm^T K_nm + n lambda K_mm)^+ k_m(x).
RidgeModel fit_krr_nystrom(const GramMatrix& k_mm, const GramMatrix& k_nm, double lambda,
                           std::vector<Index> anchors);

// max(sqrt(S_p(E)) / sqrt(n), 1 / n). The log(n / delta) branch depends on
// unobservable constants and is left out.
double theory_lambda2(double s_p_e, Index n);

// mu_{p+1}(M)^{-(1 - beta) / 2} n^{-1/2}.
double theory_lambda1(double mu_next, double beta, Index n);

}  // namespace rriokr

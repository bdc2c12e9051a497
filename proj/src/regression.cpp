#include "rriokr/regression.hpp"

#include "rriokr/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace rriokr {

RidgeModel::RidgeModel(Matrix w, double lambda, KernelSpec kernel, std::vector<Index> anchors)
    : w_(std::move(w)), lambda_(lambda), kernel_(kernel), anchors_(std::move(anchors)) {}

Vector RidgeModel::coefficients(const Vector& k_x) const {
  require(k_x.size() == w_.cols(), ErrorKind::data,
          "predict_coefficients: kernel column length does not match the model");
  return w_ * k_x;
}

Matrix RidgeModel::coefficients(const Matrix& k_x) const {
  require(k_x.rows() == w_.cols(), ErrorKind::data,
          "predict_coefficients: kernel column length does not match the model");
  return w_ * k_x;
}

RidgeModel fit_krr(const GramMatrix& k_x, double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::usage,
          "fit_krr: lambda must be positive");
  require(k_x.rows() == k_x.cols() && k_x.rows() >= 1, ErrorKind::data,
          "fit_krr: Gram matrix must be square and nonempty");
  const Index n = k_x.rows();
  Matrix shifted = k_x.entries;
  shifted.diagonal().array() += static_cast<double>(n) * lambda;
  if (!shifted.allFinite()) fail(ErrorKind::numeric, "fit_krr: Gram matrix has non-finite entries");
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::numeric, "fit_krr: ridge system is not positive definite");
  Matrix w = llt.solve(Matrix::Identity(n, n));
  w = (w + w.transpose()) / 2.0;
  if (!w.allFinite()) fail(ErrorKind::numeric, "fit_krr: ridge inverse is not finite");
  return RidgeModel(std::move(w), lambda, k_x.kernel);
}

RidgePath::RidgePath(const GramMatrix& k_x) : kernel_(k_x.kernel) {
  require(k_x.rows() == k_x.cols() && k_x.rows() >= 1, ErrorKind::data,
          "RidgePath: Gram matrix must be square and nonempty");
  SpectralDecomposition dec = eigh(k_x.entries);
  basis_ = std::move(dec.eigenvectors);
  spectrum_ = dec.eigenvalues.cwiseMax(0.0);
}

RidgePath::RidgePath(const GramMatrix& k_x, const Matrix& x) : kernel_(k_x.kernel) {
  require(k_x.rows() == k_x.cols() && k_x.rows() >= 1, ErrorKind::data,
          "RidgePath: Gram matrix must be square and nonempty");
  require(x.rows() == k_x.rows(), ErrorKind::data, "RidgePath: features do not match the Gram matrix");
  if (k_x.kernel.family() == KernelFamily::linear && x.cols() < x.rows()) {
    require(x.allFinite(), ErrorKind::numeric, "RidgePath: features have non-finite entries");
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU);
    basis_ = svd.matrixU();
    spectrum_ = svd.singularValues().array().square().matrix();
  } else {
    SpectralDecomposition dec = eigh(k_x.entries);
    basis_ = std::move(dec.eigenvectors);
    spectrum_ = dec.eigenvalues.cwiseMax(0.0);
  }
}

Vector RidgePath::filter(double lambda) const {
  require(lambda > 0.0, ErrorKind::usage, "RidgePath: lambda must be positive");
  const double shift = static_cast<double>(size()) * lambda;
  return (spectrum_.array() + shift).inverse().matrix();
}

RidgeModel RidgePath::model(double lambda) const {
  Matrix w;
  if (basis_.cols() == basis_.rows()) {
    w = basis_ * filter(lambda).asDiagonal() * basis_.transpose();
  } else {
    // Outside the thin basis the filter is the constant 1 / (n lambda).
    const double outside = 1.0 / (static_cast<double>(size()) * lambda);
    const Vector delta = filter(lambda).array() - outside;
    w = basis_ * delta.asDiagonal() * basis_.transpose();
    w.diagonal().array() += outside;
  }
  w = (w + w.transpose()) / 2.0;
  if (!w.allFinite()) fail(ErrorKind::numeric, "RidgePath: ridge inverse is not finite");
  return RidgeModel(std::move(w), lambda, kernel_);
}

std::vector<Index> select_anchors(Index n, const NystromConfig& cfg) {
  require(cfg.anchors >= 1 && cfg.anchors <= n, ErrorKind::usage,
          "Nystrom: anchor count must be in [1, n]");
  Rng rng(cfg.seed);
  std::vector<Index> perm = rng.permutation(n);
  perm.resize(static_cast<std::size_t>(cfg.anchors));
  std::sort(perm.begin(), perm.end());
  return perm;
}

RidgeModel fit_krr_nystrom(const GramMatrix& k_mm, const GramMatrix& k_nm, double lambda,
                           std::vector<Index> anchors) {
  require(lambda > 0.0, ErrorKind::usage, "fit_krr_nystrom: lambda must be positive");
  const Index n = k_nm.rows();
  const Index m = k_nm.cols();
  require(m <= n, ErrorKind::usage, "fit_krr_nystrom: more anchors than training points");
  require(k_mm.rows() == m && k_mm.cols() == m, ErrorKind::data,
          "fit_krr_nystrom: K_mm does not match K_nm");
  require(static_cast<Index>(anchors.size()) == m, ErrorKind::data,
          "fit_krr_nystrom: anchor list does not match K_nm");

  Matrix g = k_nm.entries.transpose() * k_nm.entries;
  g.noalias() += static_cast<double>(n) * lambda * k_mm.entries;
  // Pseudo-inverse with the relative eigenvalue floor.
  const SpectralDecomposition dec = eigh(g);
  const double floor =
      dec.eigenvalues.size() > 0 ? kRelativeCutoff * std::max(dec.eigenvalues(0), 0.0) : 0.0;
  Vector inv(dec.eigenvalues.size());
  for (Index i = 0; i < inv.size(); ++i)
    inv(i) = dec.eigenvalues(i) > floor && dec.eigenvalues(i) > 0.0 ? 1.0 / dec.eigenvalues(i)
                                                                    : 0.0;
  const Matrix pinv = dec.eigenvectors * inv.asDiagonal() * dec.eigenvectors.transpose();
  Matrix w = k_nm.entries * pinv;
  return RidgeModel(std::move(w), lambda, k_nm.kernel, std::move(anchors));
}

double theory_lambda2(double s_p_e, Index n) {
  require(n >= 1, ErrorKind::usage, "theory_lambda2: n must be positive");
  require(s_p_e >= 0.0, ErrorKind::usage, "theory_lambda2: S_p(E) must be nonnegative");
  const double nd = static_cast<double>(n);
  return std::max(std::sqrt(s_p_e) / std::sqrt(nd), 1.0 / nd);
}

double theory_lambda1(double mu_next, double beta, Index n) {
  require(n >= 1, ErrorKind::usage, "theory_lambda1: n must be positive");
  require(mu_next > 0.0, ErrorKind::usage, "theory_lambda1: mu_{p+1} must be positive");
  require(beta >= 0.0 && beta <= 1.0, ErrorKind::usage, "theory_lambda1: beta must be in [0,1]");
  return std::pow(mu_next, -(1.0 - beta) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace rriokr

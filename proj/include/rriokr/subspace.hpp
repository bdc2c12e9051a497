#pragma once

#include "rriokr/common.hpp"
#include "rriokr/regression.hpp"

#include <string>

namespace rriokr {

enum class Provenance {
  supervised,
  unsupervised,
  oracle,
};

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& text);

// A rank-p orthogonal projection of the output feature space, expressed in
// Gram coordinates so that output embeddings never materialize.
//
// The basis vectors are e_l = sum_i output_map(i, l) psi(y_i), orthonormal in
// the output RKHS. The coordinates of any psi(z) are output_map^T k_z(z),
// where k_z(z) holds kernel values against the n training outputs.
struct SubspaceProjection {
  Provenance provenance = Provenance::supervised;
  double lambda1 = 0.0;           // supervised only
  Index requested_rank = 0;
  Matrix beta;                    // n × p, columns u_l / sqrt(mu_l)
  Matrix output_map;              // n × p
  Matrix projected_train_outputs; // n × p (UY)
  Vector kept_eigenvalues;        // p, descending, covariance scale

  Index rank() const { return beta.cols(); }
  Index train_size() const { return beta.rows(); }

  // Leading-p sub-projection; p is clamped to rank().
  SubspaceProjection truncated(Index p) const;
};

// Supervised subspace learning: top-p eigenvectors of the empirical
// covariance of the fitted outputs h(x_i), through
//   K_h = W K_x K_z K_x W,  beta = [u_l / sqrt(mu_l)],  UY = K_z W K_x beta.
// Modes with mu_l <= 1e-12 mu_1 are dropped, so rank() may be below p.
SubspaceProjection fit_supervised_projection(const RidgeModel& model, const Matrix& k_x,
                                             const Matrix& k_z, Index p);
// Same projection from a ridge path, working inside its basis V. k_z_basis
// is K_z V.
SubspaceProjection fit_supervised_projection(const RidgePath& path, double lambda1,
                                             const Matrix& k_z_basis, Index p);

// Output kernel PCA: top-p eigenvectors of K_z / n, scaled so the basis is
// orthonormal in the output RKHS.
SubspaceProjection fit_unsupervised_projection(const Matrix& k_z, Index p);

// Top-p eigenvectors of a known d×d signal covariance, as explicit
// orthonormal columns (synthetic settings only).
struct OracleProjection {
  Matrix basis;      // d × p
  Vector eigenvalues;

  Index rank() const { return basis.cols(); }
  Matrix project(const Matrix& rows) const;  // rows are vectors in R^d
};

OracleProjection fit_oracle_projection(const Matrix& signal_covariance, Index p);

// Coordinates of candidate outputs in the projection basis, n_c × p, from
// the n × n_c cross Gram between training outputs and candidates.
Matrix projected_coordinates(const SubspaceProjection& proj, const Matrix& k_z_tr_c);

// (1/n) sum_i |P v_i - v_i|^2 over the training outputs, via
// |v_i|^2 - |coords_i|^2.
double reconstruction_residual(const SubspaceProjection& proj, const Matrix& k_z);

// Same quantity for arbitrary vectors given their squared norms and their
// projection coordinates (one row per vector).
double reconstruction_residual(const Vector& squared_norms, const Matrix& coords);

// Explicit-vector form for the oracle projection.
double reconstruction_residual(const OracleProjection& proj, const Matrix& rows);

}  // namespace rriokr

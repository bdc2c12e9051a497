#include "rriokr/subspace.hpp"

#include "rriokr/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace rriokr {

namespace {

Index kept_modes(const Vector& eigenvalues, Index p) {
  if (eigenvalues.size() == 0 || eigenvalues(0) <= 0.0) return 0;
  const double floor = kRelativeCutoff * eigenvalues(0);
  Index r = 0;
  while (r < std::min<Index>(p, eigenvalues.size()) && eigenvalues(r) > floor) ++r;
  return r;
}

void check_square(const Matrix& m, const char* what) {
  require(m.rows() == m.cols(), ErrorKind::data, what);
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::supervised: return "supervised";
    case Provenance::unsupervised: return "unsupervised";
    case Provenance::oracle: return "oracle";
  }
  return "unknown";
}

Provenance parse_provenance(const std::string& text) {
  if (text == "supervised") return Provenance::supervised;
  if (text == "unsupervised") return Provenance::unsupervised;
  if (text == "oracle") return Provenance::oracle;
  fail(ErrorKind::usage, "unknown projection provenance '" + text + "'");
}

SubspaceProjection SubspaceProjection::truncated(Index p) const {
  require(p >= 0, ErrorKind::usage, "projection rank must be nonnegative");
  const Index r = std::min(p, rank());
  SubspaceProjection out;
  out.provenance = provenance;
  out.lambda1 = lambda1;
  out.requested_rank = p;
  out.beta = beta.leftCols(r);
  out.output_map = output_map.leftCols(r);
  out.projected_train_outputs = projected_train_outputs.leftCols(r);
  out.kept_eigenvalues = kept_eigenvalues.head(r);
  return out;
}

SubspaceProjection fit_supervised_projection(const RidgeModel& model, const Matrix& k_x,
                                             const Matrix& k_z, Index p) {
  require(p >= 0, ErrorKind::usage, "fit_supervised_projection: p must be nonnegative");
  const Index n = model.size();
  check_square(k_z, "fit_supervised_projection: K_z must be square");
  require(k_z.rows() == n && k_x.cols() == n && k_x.rows() == model.column_size(),
          ErrorKind::data, "fit_supervised_projection: dimension mismatch");

  // Column j of A holds the coefficients of h(x_j) over psi(y_1..y_n).
  const Matrix a = model.coefficients(k_x);
  const Matrix k_za = k_z * a;
  Matrix k_h = a.transpose() * k_za;
  k_h = (k_h + k_h.transpose()) / 2.0;
  const SpectralDecomposition dec = eigh(k_h);
  const Index r = kept_modes(dec.eigenvalues, p);

  SubspaceProjection out;
  out.provenance = Provenance::supervised;
  out.lambda1 = model.lambda();
  out.requested_rank = p;
  out.beta = dec.eigenvectors.leftCols(r) *
             dec.eigenvalues.head(r).cwiseSqrt().cwiseInverse().asDiagonal();
  out.output_map = a * out.beta;
  out.projected_train_outputs = k_za * out.beta;
  out.kept_eigenvalues = dec.eigenvalues.head(r) / static_cast<double>(n);
  return out;
}

SubspaceProjection fit_supervised_projection(const RidgePath& path, double lambda1,
                                             const Matrix& k_z_basis, Index p) {
  require(p >= 0, ErrorKind::usage, "fit_supervised_projection: p must be nonnegative");
  const Matrix& v = path.basis();
  require(k_z_basis.rows() == v.rows() && k_z_basis.cols() == v.cols(), ErrorKind::data,
          "fit_supervised_projection: K_z V does not match the path");
  const Index n = path.size();
  // A = V diag(s / (s + n lambda)) V^T, so K_h = V (D V^T K_z V D) V^T.
  const Vector shrink = path.filter(lambda1).cwiseProduct(path.spectrum());
  Matrix core = shrink.asDiagonal() * (v.transpose() * k_z_basis) * shrink.asDiagonal();
  core = (core + core.transpose()) / 2.0;
  const SpectralDecomposition dec = eigh(core);
  const Index r = kept_modes(dec.eigenvalues, p);
  const Matrix q = dec.eigenvectors.leftCols(r) *
                   dec.eigenvalues.head(r).cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix dq = shrink.asDiagonal() * q;

  SubspaceProjection out;
  out.provenance = Provenance::supervised;
  out.lambda1 = lambda1;
  out.requested_rank = p;
  out.beta = v * q;
  out.output_map = v * dq;
  out.projected_train_outputs = k_z_basis * dq;
  out.kept_eigenvalues = dec.eigenvalues.head(r) / static_cast<double>(n);
  return out;
}

SubspaceProjection fit_unsupervised_projection(const Matrix& k_z, Index p) {
  require(p >= 0, ErrorKind::usage, "fit_unsupervised_projection: p must be nonnegative");
  check_square(k_z, "fit_unsupervised_projection: K_z must be square");
  const Index n = k_z.rows();
  const SpectralDecomposition dec = eigh(k_z / static_cast<double>(n));
  const Index r = kept_modes(dec.eigenvalues, p);

  SubspaceProjection out;
  out.provenance = Provenance::unsupervised;
  out.requested_rank = p;
  out.beta = dec.eigenvectors.leftCols(r) *
             (static_cast<double>(n) * dec.eigenvalues.head(r))
                 .cwiseSqrt()
                 .cwiseInverse()
                 .asDiagonal();
  out.output_map = out.beta;
  out.projected_train_outputs = k_z * out.beta;
  out.kept_eigenvalues = dec.eigenvalues.head(r);
  return out;
}

Matrix OracleProjection::project(const Matrix& rows) const {
  return rows * basis * basis.transpose();
}

OracleProjection fit_oracle_projection(const Matrix& signal_covariance, Index p) {
  check_square(signal_covariance, "fit_oracle_projection: covariance must be square");
  require(p >= 0 && p <= signal_covariance.rows(), ErrorKind::usage,
          "fit_oracle_projection: p must be in [0, d]");
  const SpectralDecomposition dec = eigh(signal_covariance);
  return OracleProjection{dec.eigenvectors.leftCols(p), dec.eigenvalues.head(p)};
}

Matrix projected_coordinates(const SubspaceProjection& proj, const Matrix& k_z_tr_c) {
  require(k_z_tr_c.rows() == proj.train_size(), ErrorKind::data,
          "projected_coordinates: cross Gram rows must match the training size");
  return k_z_tr_c.transpose() * proj.output_map;
}

double reconstruction_residual(const Vector& squared_norms, const Matrix& coords) {
  require(squared_norms.size() == coords.rows(), ErrorKind::data,
          "reconstruction_residual: mismatched counts");
  require(squared_norms.size() > 0, ErrorKind::data, "reconstruction_residual: no vectors");
  const Vector captured = coords.rowwise().squaredNorm();
  return (squared_norms - captured).mean();
}

double reconstruction_residual(const SubspaceProjection& proj, const Matrix& k_z) {
  require(k_z.rows() == proj.train_size() && k_z.cols() == proj.train_size(), ErrorKind::data,
          "reconstruction_residual: K_z does not match the projection");
  return reconstruction_residual(Vector(k_z.diagonal()), proj.projected_train_outputs);
}

double reconstruction_residual(const OracleProjection& proj, const Matrix& rows) {
  require(rows.cols() == proj.basis.rows(), ErrorKind::data,
          "reconstruction_residual: vector dimension mismatch");
  return reconstruction_residual(Vector(rows.rowwise().squaredNorm()), rows * proj.basis);
}

}  // namespace rriokr

#include "rriokr/spectral.hpp"

#include "rriokr/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <lapacke.h>

#include <algorithm>
#include <cmath>

namespace rriokr {

namespace {

Matrix symmetrized(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorKind::data, "eigh: matrix is not square");
  require(a.allFinite(), ErrorKind::numeric, "eigh: non-finite matrix entries");
  return (a + a.transpose()) / 2.0;
}

// LAPACK dsyevd on a symmetric matrix, results reordered to descending.
void syevd(Matrix& work, Vector& values, bool vectors) {
  const auto n = static_cast<lapack_int>(work.rows());
  values.resize(work.rows());
  if (n == 0) return;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n,
                                         work.data(), n, values.data());
  if (info != 0) fail(ErrorKind::numeric, "symmetric eigensolver did not converge");
  values.reverseInPlace();
  if (vectors) work.rowwise().reverseInPlace();
}

double largest_singular_value_squared(const Matrix& b) {
  if (b.size() == 0) return 0.0;
  const Matrix g = b.rows() <= b.cols() ? Matrix(b * b.transpose())
                                        : Matrix(b.transpose() * b);
  return std::max(0.0, eigvalsh(g)(0));
}

}  // namespace

Index SpectralDecomposition::effective_rank(double rel_cutoff) const {
  if (eigenvalues.size() == 0 || eigenvalues(0) <= 0.0) return 0;
  const double floor = rel_cutoff * eigenvalues(0);
  Index r = 0;
  while (r < eigenvalues.size() && eigenvalues(r) > floor) ++r;
  return r;
}

SpectralDecomposition eigh(const Matrix& a) {
  SpectralDecomposition out;
  out.source_dim = a.rows();
  out.eigenvectors = symmetrized(a);
  if (!out.eigenvectors.allFinite()) fail(ErrorKind::numeric, "eigh: matrix has non-finite entries");
  syevd(out.eigenvectors, out.eigenvalues, true);
  for (Index j = 0; j < out.eigenvectors.cols(); ++j) {
    auto v = out.eigenvectors.col(j);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > 1e-8 * scale) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
  }
  return out;
}

Vector eigvalsh(const Matrix& a) {
  Matrix work = symmetrized(a);
  Vector values;
  syevd(work, values, false);
  return values;
}

Matrix matrix_power(const Matrix& a, double exponent, double rel_cutoff) {
  require(exponent >= 0.0, ErrorKind::usage, "matrix_power: exponent must be >= 0");
  const SpectralDecomposition dec = eigh(a);
  const Index n = dec.eigenvalues.size();
  if (n == 0) return Matrix(0, 0);
  const double floor = rel_cutoff * dec.eigenvalues(0);
  Vector f(n);
  for (Index i = 0; i < n; ++i) {
    const double l = dec.eigenvalues(i);
    f(i) = (l > floor && l > 0.0) ? std::pow(l, exponent) : 0.0;
  }
  Matrix out = dec.eigenvectors * f.asDiagonal() * dec.eigenvectors.transpose();
  return (out + out.transpose()) / 2.0;
}

double shifted_whitened_norm(const Matrix& m, const Matrix& h, double t) {
  require(t > 0.0, ErrorKind::usage, "shifted_whitened_norm: t must be positive");
  require(m.rows() == m.cols() && m.rows() == h.rows(), ErrorKind::data,
          "shifted_whitened_norm: dimension mismatch");
  Matrix shifted = (m + m.transpose()) / 2.0;
  shifted.diagonal().array() += t;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) {
    const Matrix b = llt.matrixL().solve(h);
    return largest_singular_value_squared(b);
  }
  // M slightly indefinite from round-off: fall back to the clamped spectrum.
  return source_condition_profile(m, h, {t}).front().value;
}

std::vector<ProfilePoint> source_condition_profile(const Matrix& m, const Matrix& h,
                                                   const std::vector<double>& t_grid) {
  require(m.rows() == m.cols() && m.rows() == h.rows(), ErrorKind::data,
          "source_condition_profile: dimension mismatch");
  for (double t : t_grid)
    require(t > 0.0, ErrorKind::usage, "source_condition_profile: t must be positive");
  const SpectralDecomposition dec = eigh(m);
  const Matrix g = dec.eigenvectors.transpose() * h;
  std::vector<ProfilePoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const Vector scale =
        (dec.eigenvalues.array().max(0.0) + t).rsqrt().matrix();
    out.push_back({t, largest_singular_value_squared(scale.asDiagonal() * g)});
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  require(lo > 0.0 && hi > lo && count >= 2, ErrorKind::usage,
          "log_grid: need 0 < lo < hi and at least two points");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(hi);
  const double b = std::log(lo);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = hi;
  out.back() = lo;
  return out;
}

SlopeFit fit_loglog_slope(const std::vector<ProfilePoint>& profile,
                          std::pair<double, double> window) {
  const auto [lo, hi] = window;
  require(0.0 <= lo && lo < hi && hi <= 1.0, ErrorKind::usage,
          "fit_loglog_slope: window must satisfy 0 <= lo < hi <= 1");
  require(!profile.empty(), ErrorKind::data, "fit_loglog_slope: empty profile");
  double lt_min = INFINITY, lt_max = -INFINITY;
  for (const auto& p : profile) {
    require(p.t > 0.0, ErrorKind::data, "fit_loglog_slope: t must be positive");
    lt_min = std::min(lt_min, std::log(p.t));
    lt_max = std::max(lt_max, std::log(p.t));
  }
  const double span = lt_max - lt_min;
  const double slack = 1e-9 * std::max(1.0, span);
  const double w_lo = lt_min + lo * span - slack;
  const double w_hi = lt_min + hi * span + slack;

  std::vector<double> xs, ys;
  for (const auto& p : profile) {
    const double lt = std::log(p.t);
    if (lt < w_lo || lt > w_hi) continue;
    require(p.value > 0.0, ErrorKind::data, "fit_loglog_slope: values must be positive");
    xs.push_back(lt);
    ys.push_back(std::log(p.value));
  }
  require(xs.size() >= 4, ErrorKind::data,
          "fit_loglog_slope: fewer than 4 points inside the window");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, ErrorKind::data, "fit_loglog_slope: degenerate window");

  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.t_min = std::exp(*std::min_element(xs.begin(), xs.end()));
  fit.t_max = std::exp(*std::max_element(xs.begin(), xs.end()));
  const double ss_res = syy - fit.slope * sxy;
  fit.r_squared = syy > 0.0 ? 1.0 - std::max(0.0, ss_res) / syy : 1.0;
  fit.points = static_cast<Index>(xs.size());
  return fit;
}

Matrix haar_orthogonal(Index d, std::uint64_t seed) {
  require(d >= 1, ErrorKind::usage, "haar_orthogonal: dimension must be positive");
  Rng rng(seed);
  const Matrix g = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace rriokr

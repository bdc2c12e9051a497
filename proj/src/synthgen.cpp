#include "rriokr/synthgen.hpp"

#include "rriokr/random.hpp"
#include "rriokr/spectral.hpp"

#include <cmath>

namespace rriokr {

namespace {

enum SeedTag : std::uint64_t {
  kTagInputBasis = 1,
  kTagH0 = 2,
  kTagOutputBasis = 3,
  kTagNoiseBasis = 4,
  kTagSampleX = 5,
  kTagSampleNoise = 6,
};

Matrix basis(Index d, bool random, std::uint64_t seed) {
  return random ? haar_orthogonal(d, seed) : Matrix::Identity(d, d);
}

}  // namespace

SpectralProfile SpectralProfile::polynomial(double rate, double scale) {
  require(rate > 0.0 && scale > 0.0, ErrorKind::usage,
          "polynomial profile needs positive rate and scale");
  SpectralProfile p;
  p.kind = Kind::polynomial;
  p.rate = rate;
  p.scale = scale;
  return p;
}

SpectralProfile SpectralProfile::finite_rank(Index rank, double value) {
  require(rank >= 0 && value >= 0.0, ErrorKind::usage,
          "finite-rank profile needs rank >= 0 and value >= 0");
  SpectralProfile p;
  p.kind = Kind::finite_rank;
  p.rank = rank;
  p.scale = value;
  return p;
}

SpectralProfile SpectralProfile::exponential(double rate, double scale) {
  require(rate > 0.0 && scale > 0.0, ErrorKind::usage,
          "exponential profile needs positive rate and scale");
  SpectralProfile p;
  p.kind = Kind::exponential;
  p.rate = rate;
  p.scale = scale;
  return p;
}

SpectralProfile SpectralProfile::explicit_list(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] >= 0.0, ErrorKind::usage, "explicit profile values must be nonnegative");
    require(i == 0 || values[i] <= values[i - 1], ErrorKind::usage,
            "explicit profile values must be descending");
  }
  SpectralProfile p;
  p.kind = Kind::explicit_list;
  p.values = std::move(values);
  return p;
}

Vector SpectralProfile::eigenvalues(Index d) const {
  require(d >= 1, ErrorKind::usage, "profile dimension must be positive");
  Vector mu(d);
  for (Index i = 0; i < d; ++i) {
    const double p = static_cast<double>(i + 1);
    switch (kind) {
      case Kind::polynomial: mu(i) = scale * std::pow(p, -rate); break;
      case Kind::finite_rank: mu(i) = i < rank ? scale : 0.0; break;
      case Kind::exponential: mu(i) = scale * std::exp(-rate * p); break;
      case Kind::explicit_list:
        require(static_cast<Index>(values.size()) == d, ErrorKind::usage,
                "explicit profile length does not match the dimension");
        mu(i) = values[static_cast<std::size_t>(i)];
        break;
    }
  }
  return mu;
}

Matrix SyntheticProblem::signal_covariance() const {
  Matrix m = h * input_covariance * h.transpose();
  return (m + m.transpose()) / 2.0;
}

Matrix build_covariance(const SpectralProfile& profile, const Matrix& eigvecs) {
  require(eigvecs.rows() == eigvecs.cols(), ErrorKind::usage,
          "build_covariance: eigenvector matrix must be square");
  const Vector mu = profile.eigenvalues(eigvecs.rows());
  Matrix out = eigvecs * mu.asDiagonal() * eigvecs.transpose();
  return (out + out.transpose()) / 2.0;
}

Matrix build_h(const SyntheticProblemSpec& spec, const Matrix& c, const Matrix& c_basis,
               std::uint64_t seed) {
  const Index d = spec.d;
  require(c.rows() == d && c_basis.rows() == d, ErrorKind::usage, "build_h: dimension mismatch");
  Matrix h;
  switch (spec.h_mode) {
    case HMode::gaussian_h0:
      h = Rng(derive_seed(seed, kTagH0)).normal_matrix(d, d);
      break;
    case HMode::powered: {
      require(spec.h_gamma >= 0.0, ErrorKind::usage, "build_h: gamma must be >= 0");
      const Matrix h0 = Rng(derive_seed(seed, kTagH0)).normal_matrix(d, d);
      h = matrix_power(h0 * c * h0.transpose(), spec.h_gamma) * h0;
      break;
    }
    case HMode::diagonal: {
      Vector s(d);
      for (Index i = 0; i < d; ++i) s(i) = std::pow(static_cast<double>(i + 1), -spec.h_rate);
      const Matrix v = basis(d, spec.random_bases, derive_seed(seed, kTagOutputBasis));
      h = v * s.asDiagonal() * c_basis.transpose();
      break;
    }
    case HMode::spectral: {
      const Vector s = spec.h_profile.eigenvalues(d).cwiseSqrt();
      const Matrix v = basis(d, spec.random_bases, derive_seed(seed, kTagOutputBasis));
      h = v * s.asDiagonal() * c_basis.transpose();
      break;
    }
  }
  if (spec.h_unit_norm) {
    const Vector sv = eigvalsh(h * h.transpose());
    require(sv(0) > 0.0, ErrorKind::numeric, "build_h: cannot normalize a zero operator");
    h /= std::sqrt(sv(0));
  }
  require(std::isfinite(spec.h_scale) && spec.h_scale > 0.0, ErrorKind::usage,
          "build_h: scale must be positive");
  return spec.h_scale == 1.0 ? h : Matrix(spec.h_scale * h);
}

SyntheticProblem build_problem(const SyntheticProblemSpec& spec) {
  require(spec.d >= 1, ErrorKind::usage, "synthetic problem dimension must be positive");
  const Index d = spec.d;
  SyntheticProblem out;
  out.spec = spec;
  out.c_basis = basis(d, spec.random_bases, derive_seed(spec.seed, kTagInputBasis));
  out.c = build_covariance(spec.c_profile, out.c_basis);
  out.h = build_h(spec, out.c, out.c_basis, spec.seed);
  const Matrix e_basis = basis(d, spec.random_bases, derive_seed(spec.seed, kTagNoiseBasis));
  out.e = build_covariance(spec.e_profile, e_basis);
  out.noise_sqrt = e_basis * spec.e_profile.eigenvalues(d).cwiseSqrt().asDiagonal() *
                   e_basis.transpose();
  if (spec.x_law == XLaw::normal_with_cov_c) {
    out.input_covariance = out.c;
    out.input_sqrt = out.c_basis * spec.c_profile.eigenvalues(d).cwiseSqrt().asDiagonal() *
                     out.c_basis.transpose();
  } else {
    out.input_covariance = Matrix::Identity(d, d);
    out.input_sqrt = Matrix::Identity(d, d);
  }
  return out;
}

namespace {

// a * b one row at a time, so row i never depends on how many rows a has.
Matrix row_by_row(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  const Matrix bt = b.transpose();
  for (Index i = 0; i < a.rows(); ++i) out.row(i).noalias() = (bt * a.row(i).transpose()).transpose();
  return out;
}

}  // namespace

Dataset sample_dataset(const SyntheticProblem& problem, Index n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::usage, "sample_dataset: n must be positive");
  const Index d = problem.spec.d;
  const Vector e_spec = eigvalsh(problem.e);
  require(e_spec.size() == 0 || e_spec(d - 1) >= -1e-10 * std::max(1.0, e_spec(0)),
          ErrorKind::data, "sample_dataset: noise covariance is not PSD");
  Dataset out;
  Rng x_rng(derive_seed(seed, kTagSampleX));
  Rng e_rng(derive_seed(seed, kTagSampleNoise));
  // Rows are g^T Sigma^{1/2} with the symmetric square root.
  out.x = row_by_row(x_rng.normal_matrix(n, d), problem.input_sqrt);
  out.y_clean = row_by_row(out.x, problem.h.transpose());
  out.y = out.y_clean + row_by_row(e_rng.normal_matrix(n, d), problem.noise_sqrt);
  return out;
}

AssumptionExponents compute_assumption_exponents(double r_c, double r_h, double r_e) {
  require(r_c > 0.0 && r_h > 0.0 && r_e > 0.0, ErrorKind::usage,
          "assumption exponents need positive rates");
  AssumptionExponents out;
  out.s = 2.0 * r_h + r_c;
  out.alpha = 2.0 / out.s;
  out.beta = r_c / out.s;
  out.gamma = (out.s - r_e) / out.s;
  out.gamma_out_of_range = out.gamma < 0.0 || out.gamma > 1.0;
  return out;
}

double gamma_to_beta(double gamma) {
  require(gamma >= 0.0, ErrorKind::usage, "gamma_to_beta: gamma must be >= 0");
  return 1.0 / (2.0 * gamma + 1.0);
}

std::string to_string(HMode mode) {
  switch (mode) {
    case HMode::gaussian_h0: return "gaussian_h0";
    case HMode::powered: return "powered";
    case HMode::diagonal: return "diagonal";
    case HMode::spectral: return "spectral";
  }
  return "unknown";
}

std::string to_string(XLaw law) {
  return law == XLaw::standard_normal ? "standard_normal" : "normal_with_cov_c";
}

}  // namespace rriokr

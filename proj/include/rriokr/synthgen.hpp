#pragma once

#include "rriokr/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rriokr {

// Eigenvalue profile of a d×d covariance.
//   polynomial:   scale * p^{-rate}
//   finite_rank:  value for p <= rank, 0 beyond
//   exponential:  scale * exp(-rate * p)
//   explicit:     the given list (nonnegative, descending, length d)
struct SpectralProfile {
  enum class Kind { polynomial, finite_rank, exponential, explicit_list };

  Kind kind = Kind::polynomial;
  double rate = 1.0;
  double scale = 1.0;
  Index rank = 0;
  std::vector<double> values;

  static SpectralProfile polynomial(double rate, double scale = 1.0);
  static SpectralProfile finite_rank(Index rank, double value);
  static SpectralProfile exponential(double rate, double scale = 1.0);
  static SpectralProfile explicit_list(std::vector<double> values);

  Vector eigenvalues(Index d) const;
};

enum class HMode {
  gaussian_h0,  // iid standard normal H0
  powered,      // (H0 C H0^T)^gamma H0
  diagonal,     // sum_i i^{-rate} v_i (x) u_i
  spectral,     // V diag(sqrt(mu_h)) U^T, mu_h from h_profile
};

enum class XLaw {
  standard_normal,
  normal_with_cov_c,
};

struct SyntheticProblemSpec {
  Index d = 0;
  Index n_train = 0;
  Index n_val = 0;
  Index n_test = 0;
  SpectralProfile c_profile = SpectralProfile::polynomial(2.0);
  HMode h_mode = HMode::gaussian_h0;
  double h_gamma = 0.0;
  double h_rate = 1.0;
  SpectralProfile h_profile = SpectralProfile::finite_rank(1, 1.0);
  // Rescale H to unit operator norm after construction.
  bool h_unit_norm = false;
  // Multiplies H after the optional normalization.
  double h_scale = 1.0;
  SpectralProfile e_profile = SpectralProfile::finite_rank(0, 0.0);
  XLaw x_law = XLaw::standard_normal;
  // Haar eigenvectors for C, E and the output basis of H; identity otherwise.
  bool random_bases = true;
  std::uint64_t seed = 0;
};

// Population quantities of a synthetic least-squares problem
// y = H x + eps, x ~ N(0, Sigma_x), eps ~ N(0, E).
struct SyntheticProblem {
  SyntheticProblemSpec spec;
  Matrix c;                 // C from c_profile
  Matrix c_basis;           // eigenvectors U of C
  Matrix h;
  Matrix e;
  Matrix input_covariance;  // Sigma_x: C or I per x_law
  Matrix input_sqrt;
  Matrix noise_sqrt;

  // M = H Sigma_x H^T, the covariance of h*(x).
  Matrix signal_covariance() const;
};

// V diag(mu) V^T.
Matrix build_covariance(const SpectralProfile& profile, const Matrix& eigvecs);

// `c_basis` holds the eigenvectors of C (used by the diagonal and spectral
// modes).
Matrix build_h(const SyntheticProblemSpec& spec, const Matrix& c, const Matrix& c_basis,
               std::uint64_t seed);

SyntheticProblem build_problem(const SyntheticProblemSpec& spec);

struct Dataset {
  Matrix x;
  Matrix y;
  Matrix y_clean;  // h*(x)
};

Dataset sample_dataset(const SyntheticProblem& problem, Index n, std::uint64_t seed);

struct AssumptionExponents {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double s = 0.0;  // decay of mu_p(M): 2 r_h + r_c
  bool gamma_out_of_range = false;
};

// Exponents for polynomially decaying C, H and E spectra:
//   alpha = 2 / (2 r_h + r_c), beta = r_c / (2 r_h + r_c),
//   gamma = 1 - r_e / (2 r_h + r_c).
AssumptionExponents compute_assumption_exponents(double r_c, double r_h, double r_e);

// 1 / (2 gamma + 1).
double gamma_to_beta(double gamma);

std::string to_string(HMode mode);
std::string to_string(XLaw law);

}  // namespace rriokr

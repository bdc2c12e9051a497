#pragma once

#include "rriokr/common.hpp"
#include "rriokr/kernels.hpp"
#include "rriokr/regression.hpp"
#include "rriokr/subspace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rriokr {

// Structured outputs a decoder may return, with their kernel self-values
// N_i = k_z(z_i, z_i).
struct CandidateSet {
  Matrix candidates;  // n_c × d_z
  Vector self_kernel;
  std::vector<Index> ids;

  Index size() const { return candidates.rows(); }

  // ids default to 0..n_c-1.
  static CandidateSet build(const KernelSpec& output_kernel, Matrix candidates,
                            std::vector<Index> ids = {});
};

// k smallest distances, ascending; equal distances keep the lower candidate
// index first.
struct DecodeResult {
  std::vector<Index> ranked_ids;
  std::vector<Index> ranked_positions;  // row in the candidate set
  std::vector<double> distances;
  std::int64_t timing_ns = 0;
};

// Candidate embeddings in the projection coordinates, n_c × p. The literal
// route W K_x K_z^{tr/c} beta of the decoding phase; for a supervised
// projection this equals projected_coordinates(proj, k_z_tr_c).
Matrix project_candidates(const SubspaceProjection& proj, const Matrix& w, const Matrix& k_x,
                          const Matrix& k_z_tr_c);
Matrix project_candidates(const SubspaceProjection& proj, const Matrix& k_z_tr_c);

// Top-k of D = N - 2 S.
DecodeResult rank_distances(const Vector& d, const std::vector<Index>& ids, Index k);

// Reduced-rank decoding: alpha = W k_x, Uh = UY^T alpha, S = UY_c Uh.
DecodeResult decode_reduced(const RidgeModel& model, const SubspaceProjection& proj,
                            const Matrix& uy_c, const Vector& k_x_test,
                            const CandidateSet& candidates, Index k);

// Full-rank decoding: S = K_z^{tr/c}^T alpha.
DecodeResult decode_fullrank(const RidgeModel& model, const Matrix& k_z_tr_c,
                             const Vector& k_x_test, const CandidateSet& candidates, Index k);

// Reduced-rank decoder with every test-independent product precomputed:
// the p×n map UY^T W and the candidate coordinates UY_c. One decode costs
// O(p (n + n_c)).
class ReducedDecoder {
 public:
  ReducedDecoder(const RidgeModel& model, const SubspaceProjection& proj, Matrix uy_c,
                 const CandidateSet& candidates);

  Index rank() const { return test_map_.rows(); }
  // Projected coordinates of h(x) for one kernel column, p-vector.
  Vector project_test(const Vector& k_x_test) const;
  DecodeResult decode(const Vector& k_x_test, Index k) const;
  // One result per column of the n × m kernel block.
  std::vector<DecodeResult> decode_block(const Matrix& k_x_test, Index k) const;

 private:
  Matrix test_map_;  // p × n
  Matrix uy_c_;      // n_c × p
  Vector self_kernel_;
  std::vector<Index> ids_;
};

// Full-rank decoder over a fixed candidate set, O(n^2 + n n_c) per decode.
class FullRankDecoder {
 public:
  FullRankDecoder(const RidgeModel& model, Matrix k_z_tr_c, const CandidateSet& candidates);

  DecodeResult decode(const Vector& k_x_test, Index k) const;
  std::vector<DecodeResult> decode_block(const Matrix& k_x_test, Index k) const;

 private:
  Matrix w_;
  Matrix k_z_tr_c_;
  Vector self_kernel_;
  std::vector<Index> ids_;
};

// |psi(z) - psi(z')|^2.
double rbf_loss(const KernelSpec& output_kernel, std::span<const double> z,
                std::span<const double> z_prime);

enum class DecodeVariant {
  reduced,
  fullrank,
};

std::string to_string(DecodeVariant v);

struct TimingRow {
  DecodeVariant variant = DecodeVariant::reduced;
  Index n = 0;
  Index n_candidates = 0;
  Index p = 0;
  Index test_points = 0;
  Index repetitions = 0;
  // Median over repetitions of the per-test-point decode time.
  double median_ns_per_point = 0.0;
};

struct TimingProbeConfig {
  Index test_points = 32;
  Index repetitions = 20;
  Index k = 1;
  std::uint64_t seed = 0;
};

// Wall-clock timing of amortized decoding on random model matrices of the
// given shape (the operation count does not depend on their values).
TimingRow timing_probe(DecodeVariant variant, Index n, Index n_candidates, Index p,
                       const TimingProbeConfig& cfg);

}  // namespace rriokr

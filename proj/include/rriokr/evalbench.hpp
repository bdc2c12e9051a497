#pragma once

#include "rriokr/common.hpp"
#include "rriokr/kernels.hpp"
#include "rriokr/regression.hpp"
#include "rriokr/subspace.hpp"
#include "rriokr/synthgen.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rriokr {

// ---------------------------------------------------------------- metrics

// Mean of |pred_i - target_i|^2 over rows (explicit output vectors).
double mse_output_space(const Matrix& predictions, const Matrix& targets);

// Kernel-trick form for predictions h(x_j) = sum_i alpha(i, j) psi(y_i):
//   alpha_j^T K_z alpha_j - 2 alpha_j^T k_z(tr, t_j) + k_z(t_j, t_j).
// alpha is n_tr × m, k_z_train n_tr × n_tr, k_z_train_targets n_tr × m.
double mse_output_space(const Matrix& alpha, const Matrix& k_z_train,
                        const Matrix& k_z_train_targets, const Vector& target_self_kernel);

// Projected predictors P h(x) given their coordinates in an orthonormal
// basis (m × p) and the target coordinates in the same basis (m × p):
//   |Uh|^2 - 2 Uh . c_t + k_z(t, t).
double mse_output_space_projected(const Matrix& prediction_coords, const Matrix& target_coords,
                                  const Vector& target_self_kernel);

using LabelSet = std::vector<Index>;

// Mean over examples of 2|T n P| / (|T| + |P|); 1 when both sets are empty,
// 0 when exactly one is. Duplicate labels inside a set count once.
double f1_example_based(const std::vector<LabelSet>& truth, const std::vector<LabelSet>& predicted);

// Fraction of examples whose true id is among the first k ranked ids.
double topk_accuracy(const std::vector<std::vector<Index>>& ranked_ids,
                     const std::vector<Index>& true_ids, Index k);

// Label j is predicted for row i when scores(i, j) >= threshold.
std::vector<LabelSet> label_threshold_decode(const Matrix& scores, double threshold = 0.5);

// Positive entries of each row of a 0/1 matrix.
std::vector<LabelSet> label_sets(const Matrix& y);

// ------------------------------------------------------------ grids and CV

struct GridSpec {
  std::vector<double> lambdas;  // ascending
  std::vector<Index> ranks;     // ascending

  // lambda in 10^{-8..1} (10 points), ranks 1, 2, 4, ... <= max_rank.
  static GridSpec defaults(Index max_rank);
  void validate(Index max_rank) const;
};

// 10^lo_exp .. 10^hi_exp, `count` points, ascending.
std::vector<double> log_lambda_grid(double lo_exp, double hi_exp, int count);
// 1, 2, 4, ... up to max_rank.
std::vector<Index> power_of_two_ranks(Index max_rank);

struct CvPlan {
  Index folds = 5;
  Index inner_folds = 0;         // 0: no inner loop
  Index repeats = 1;
  double holdout_fraction = 0.0; // > 0: repeated random sub-sampling
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Index> train;       // sorted
  std::vector<Index> validation;  // sorted
};

// K-fold partitions (one per repeat) or repeated holdouts. Fold sizes differ
// by at most one.
std::vector<Split> make_splits(Index n, const CvPlan& plan);

// Same splits expressed as rows of `rows` (nesting inside an outer fold).
std::vector<Split> make_splits(const std::vector<Index>& rows, Index folds, std::uint64_t seed);

enum class CvObjective {
  val_mse_vs_y,            // |h_lambda(x) - y|^2, selects lambda_1
  val_mse_vs_projected_y,  // |h_lambda(x) - P y|^2, selects lambda_2
  val_mse_projected_vs_y,  // |P h_lambda(x) - y|^2, selects p
};

std::string to_string(CvObjective objective);

// Validation scores of one fold, lambdas × ranks.
using FoldScorer = std::function<Matrix(Index fold, const Split& split, CvObjective objective)>;

struct CvResult {
  Matrix mean;    // lambdas × ranks, weighted by validation size
  Matrix stderr_; // fold-to-fold standard error
  Index lambda_index = 0;
  Index rank_index = 0;
  double lambda = 0.0;
  Index rank = 0;
};

// Minimum of a score table; ties go to the smallest lambda, then the
// smallest rank.
void select_minimum(CvResult& result, const GridSpec& grid);

CvResult cross_validate(const FoldScorer& scorer, const std::vector<Split>& splits,
                        const GridSpec& grid, CvObjective objective);
CvResult cross_validate(const FoldScorer& scorer, Index n, const CvPlan& plan,
                        const GridSpec& grid, CvObjective objective);

struct NestedCvResult {
  std::vector<Split> outer;
  std::vector<CvResult> inner;       // selection inside each outer training set
  std::vector<double> outer_scores;  // score of the inner selection on the outer fold
};

// Outer plan.folds × inner plan.inner_folds. The scorer receives splits in
// the original row numbering for both loops.
NestedCvResult nested_cross_validate(const FoldScorer& scorer, Index n, const CvPlan& plan,
                                     const GridSpec& grid, CvObjective objective);

// ------------------------------------------------- per-split kernel evaluator

// Coordinates of training outputs (UY, n × r) and evaluation targets
// (m × r) in an orthonormal output basis, plus UY^T V for the ridge path.
struct ProjectionCoords {
  Provenance provenance = Provenance::supervised;
  Matrix train;
  Matrix eval;
  Matrix train_t_basis;  // r × n
  Index rank() const { return train.cols(); }
};

// One train/eval split with the training input Gram diagonalized once, so
// every lambda of a grid is scored without refitting. Predictions are never
// formed in output space: all scores go through output Gram matrices.
class SplitEvaluator {
 public:
  SplitEvaluator(const KernelSpec& input_kernel, const KernelSpec& output_kernel,
                 const Matrix& x_train, const Matrix& y_train, const Matrix& x_eval,
                 const Matrix& y_eval);

  Index train_size() const { return path_.size(); }
  Index eval_size() const { return eval_self_.size(); }
  const RidgePath& path() const { return path_; }
  const GramMatrix& input_gram() const { return k_x_; }
  const GramMatrix& output_gram() const { return k_z_; }
  const Matrix& output_cross() const { return k_z_cross_; }
  const Vector& eval_self_kernel() const { return eval_self_; }

  RidgeModel model(double lambda) const { return path_.model(lambda); }
  // alpha for every evaluation point, n × m.
  Matrix coefficients(double lambda) const;

  // Mean over eval points of |h_lambda(x) - y|^2.
  double mse_vs_targets(double lambda) const;

  ProjectionCoords supervised_coords(double lambda1, Index rank) const;
  ProjectionCoords unsupervised_coords(Index rank) const;
  // Explicit d × r orthonormal basis; linear output kernel only.
  ProjectionCoords oracle_coords(const Matrix& basis) const;

  // Per rank: mean |h_lambda(x) - P_p y|^2. Ranks above coords.rank() use
  // the full coordinate set.
  Vector mse_vs_projected_targets(double lambda, const ProjectionCoords& coords,
                                  const std::vector<Index>& ranks) const;
  // Per rank: mean |P_p h_lambda(x) - y|^2.
  Vector projected_mse(double lambda, const ProjectionCoords& coords,
                       const std::vector<Index>& ranks) const;

 private:
  Matrix filtered(double lambda) const;  // diag(filter) V^T K_x(tr, ev)
  Vector fitted_sq_norms(const Matrix& fb) const;
  Vector cross_terms(const Matrix& fb) const;

  KernelSpec output_kernel_;
  GramMatrix k_x_;
  GramMatrix k_z_;
  RidgePath path_;
  Matrix y_train_;
  Matrix y_eval_;
  Matrix basis_t_kx_eval_;  // V^T K_x(tr, ev)
  Matrix basis_t_kz_eval_;  // V^T K_z(tr, ev)
  Matrix k_z_cross_;
  Vector eval_self_;
  // Factor L with K_z = L L^T when cheaper than K_z itself (linear kernel
  // with d_y < n): V^T Y. Empty otherwise.
  Matrix basis_t_factor_;
  Matrix basis_t_kz_basis_;  // V^T K_z V when no factor is used
  Matrix k_z_basis_;         // K_z V
};

// ---------------------------------------------------- hyperparameter search

struct RankSelection {
  Provenance provenance = Provenance::supervised;
  CvResult projected_targets;        // objective val_mse_vs_projected_y
  std::vector<Index> lambda2_index;  // per rank
  std::vector<double> lambda2;       // per rank
  Vector estimator_scores;           // per rank, |P h_{lambda2} - y|^2
  Vector estimator_stderr;
  Index selected = 0;                // rank index
};

struct HyperparameterSelection {
  CvResult lambda1;
  std::vector<RankSelection> projections;
};

// lambda_1 by val_mse_vs_y; for each provenance lambda_2(p) by
// val_mse_vs_projected_y with the projection fitted on the training part of
// each split; p by the validation error of P h_{lambda_2(p)}. `oracle_basis`
// (d × d, descending) is required for the oracle provenance.
HyperparameterSelection select_hyperparameters(const std::vector<SplitEvaluator>& evaluators,
                                               const GridSpec& grid,
                                               const std::vector<Provenance>& provenances,
                                               const Matrix* oracle_basis = nullptr);

// ------------------------------------------------------- experiment reports

struct ReportRow {
  std::string experiment_id;
  std::uint64_t seed = 0;
  Index n = 0;
  Index p = 0;  // 0: no projection
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string metric;
  double value = 0.0;
  std::int64_t timing_ns = 0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  void append(ReportRow row) { rows.push_back(std::move(row)); }
  void extend(const ExperimentReport& other);
};

// ------------------------------------------------------- synthetic protocol

struct SyntheticExperimentConfig {
  SyntheticProblemSpec problem;
  KernelSpec input_kernel = KernelSpec::linear();
  KernelSpec output_kernel = KernelSpec::linear();
  GridSpec grid;  // empty grids take the defaults
  CvPlan plan;    // used when problem.n_val == 0
  std::vector<Provenance> projections = {Provenance::supervised, Provenance::unsupervised,
                                         Provenance::oracle};
  bool denoised = true;
  bool record_timings = false;
  std::string experiment_id = "synth";
};

struct EstimatorCurve {
  Provenance provenance = Provenance::supervised;
  std::vector<Index> ranks;
  std::vector<double> lambda2;
  std::vector<double> validation_vs_projected_y;  // at lambda2
  std::vector<double> validation_mse;             // |P h - y|^2 at lambda2
  std::vector<double> test_mse;
  Index selected_rank = 0;
};

struct SyntheticExperimentResult {
  std::uint64_t seed = 0;
  Index n_train = 0;
  GridSpec grid;
  double lambda1 = 0.0;
  double krr_test_mse = 0.0;
  double denoised_lambda = 0.0;
  double denoised_test_mse = 0.0;
  std::vector<EstimatorCurve> curves;
  Vector signal_spectrum;     // eigenvalues of M
  Vector noise_spectrum;      // eigenvalues of E
  Vector noise_along_signal;  // <v_p, E v_p> for the eigenvectors v_p of M
  ExperimentReport report;

  const EstimatorCurve* curve(Provenance p) const;
};

// Train/validation/test samples from the problem, hyperparameters selected
// on the validation set (problem.n_val > 0) or by cross-validation on the
// training set, test MSE against noisy targets for every rank of the grid.
SyntheticExperimentResult run_synthetic_experiment(const SyntheticExperimentConfig& cfg);

// ------------------------------------------------------ structured protocol

enum class CandidatePolicy {
  training_outputs,
  training_and_test_outputs,
};

struct StructuredExperimentConfig {
  KernelSpec input_kernel = KernelSpec::gaussian(1.0);
  // Unset for multilabel data: gaussian with sigma2 = mean labels per row.
  bool output_kernel_set = false;
  KernelSpec output_kernel = KernelSpec::linear();
  GridSpec grid;
  CvPlan plan;
  Provenance provenance = Provenance::supervised;
  CandidatePolicy candidates = CandidatePolicy::training_outputs;
  std::vector<Index> topk = {1, 5};
  bool record_timings = false;
  std::string experiment_id = "structured";
};

struct StructuredFoldResult {
  Index fold = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Index rank = 0;
  double f1_reduced = 0.0;
  double f1_fullrank = 0.0;
  double rbf_loss_reduced = 0.0;
  double rbf_loss_fullrank = 0.0;
  std::vector<double> topk_reduced;
  std::vector<double> topk_fullrank;
  std::int64_t fit_ns = 0;
  std::int64_t decode_reduced_ns = 0;
  std::int64_t decode_fullrank_ns = 0;
};

struct StructuredExperimentResult {
  KernelSpec output_kernel = KernelSpec::linear();
  bool multilabel = false;
  std::vector<StructuredFoldResult> folds;
  ExperimentReport report;
};

// Mean positive labels per row of a 0/1 matrix.
double mean_labels_per_example(const Matrix& y);
bool is_binary(const Matrix& y);

StructuredExperimentResult run_structured_experiment(const Matrix& x, const Matrix& y,
                                                     const StructuredExperimentConfig& cfg);

}  // namespace rriokr

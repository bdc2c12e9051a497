#include "rriokr/evalbench.hpp"

#include "rriokr/random.hpp"
#include "rriokr/spectral.hpp"
#include "rriokr/structpred.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace rriokr {

namespace {

std::int64_t elapsed_ns(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<Index> sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Weighted mean and fold-to-fold standard error of per-fold tables.
CvResult aggregate(const std::vector<Matrix>& tables, const std::vector<double>& weights,
                   const GridSpec& grid) {
  require(!tables.empty(), ErrorKind::data, "cross_validate: no folds");
  const Index rows = tables.front().rows();
  const Index cols = tables.front().cols();
  CvResult out;
  out.mean = Matrix::Zero(rows, cols);
  double total = 0.0;
  for (std::size_t f = 0; f < tables.size(); ++f) {
    require(tables[f].rows() == rows && tables[f].cols() == cols, ErrorKind::data,
            "cross_validate: fold tables differ in shape");
    out.mean += weights[f] * tables[f];
    total += weights[f];
  }
  out.mean /= total;
  out.stderr_ = Matrix::Zero(rows, cols);
  const auto folds = static_cast<double>(tables.size());
  if (tables.size() > 1) {
    Matrix plain = Matrix::Zero(rows, cols);
    for (const Matrix& t : tables) plain += t;
    plain /= folds;
    for (const Matrix& t : tables) out.stderr_ += (t - plain).cwiseAbs2();
    out.stderr_ = (out.stderr_ / (folds - 1.0) / folds).cwiseSqrt();
  }
  select_minimum(out, grid);
  return out;
}

// Running sums over the leading coordinates, read at each requested rank.
Vector prefix_at(const Vector& per_coord, const std::vector<Index>& ranks) {
  Vector cumulative(per_coord.size() + 1);
  cumulative(0) = 0.0;
  for (Index l = 0; l < per_coord.size(); ++l) cumulative(l + 1) = cumulative(l) + per_coord(l);
  Vector out(static_cast<Index>(ranks.size()));
  for (std::size_t i = 0; i < ranks.size(); ++i)
    out(static_cast<Index>(i)) = cumulative(std::min(ranks[i], per_coord.size()));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- metrics

double mse_output_space(const Matrix& predictions, const Matrix& targets) {
  require(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
          ErrorKind::data, "mse_output_space: prediction and target shapes differ");
  require(predictions.rows() > 0, ErrorKind::data, "mse_output_space: no points");
  return (predictions - targets).rowwise().squaredNorm().mean();
}

double mse_output_space(const Matrix& alpha, const Matrix& k_z_train,
                        const Matrix& k_z_train_targets, const Vector& target_self_kernel) {
  const Index n = alpha.rows();
  const Index m = alpha.cols();
  require(k_z_train.rows() == n && k_z_train.cols() == n && k_z_train_targets.rows() == n &&
              k_z_train_targets.cols() == m && target_self_kernel.size() == m,
          ErrorKind::data, "mse_output_space: count mismatch");
  require(m > 0, ErrorKind::data, "mse_output_space: no points");
  const Matrix k_alpha = k_z_train * alpha;
  double total = 0.0;
  for (Index j = 0; j < m; ++j)
    total += alpha.col(j).dot(k_alpha.col(j)) - 2.0 * alpha.col(j).dot(k_z_train_targets.col(j)) +
             target_self_kernel(j);
  return total / static_cast<double>(m);
}

double mse_output_space_projected(const Matrix& prediction_coords, const Matrix& target_coords,
                                  const Vector& target_self_kernel) {
  require(prediction_coords.rows() == target_coords.rows() &&
              prediction_coords.cols() == target_coords.cols() &&
              target_self_kernel.size() == target_coords.rows(),
          ErrorKind::data, "mse_output_space_projected: count mismatch");
  require(target_coords.rows() > 0, ErrorKind::data, "mse_output_space_projected: no points");
  const Vector per_point = prediction_coords.rowwise().squaredNorm() -
                           2.0 * prediction_coords.cwiseProduct(target_coords).rowwise().sum() +
                           target_self_kernel;
  return per_point.mean();
}

double f1_example_based(const std::vector<LabelSet>& truth, const std::vector<LabelSet>& predicted) {
  require(truth.size() == predicted.size(), ErrorKind::data,
          "f1_example_based: truth and prediction counts differ");
  require(!truth.empty(), ErrorKind::data, "f1_example_based: no examples");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::set<Index> t(truth[i].begin(), truth[i].end());
    const std::set<Index> p(predicted[i].begin(), predicted[i].end());
    if (t.empty() && p.empty()) {
      total += 1.0;
      continue;
    }
    std::size_t common = 0;
    for (Index label : p) common += t.count(label);
    total += 2.0 * static_cast<double>(common) / static_cast<double>(t.size() + p.size());
  }
  return total / static_cast<double>(truth.size());
}

double topk_accuracy(const std::vector<std::vector<Index>>& ranked_ids,
                     const std::vector<Index>& true_ids, Index k) {
  require(ranked_ids.size() == true_ids.size(), ErrorKind::data,
          "topk_accuracy: ranking and truth counts differ");
  require(!true_ids.empty(), ErrorKind::data, "topk_accuracy: no examples");
  require(k >= 1, ErrorKind::usage, "topk_accuracy: k must be at least 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < true_ids.size(); ++i) {
    const auto& r = ranked_ids[i];
    const auto end = r.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(r.size()));
    if (std::find(r.begin(), end, true_ids[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(true_ids.size());
}

std::vector<LabelSet> label_threshold_decode(const Matrix& scores, double threshold) {
  std::vector<LabelSet> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i)
    for (Index j = 0; j < scores.cols(); ++j)
      if (scores(i, j) >= threshold) out[static_cast<std::size_t>(i)].push_back(j);
  return out;
}

std::vector<LabelSet> label_sets(const Matrix& y) { return label_threshold_decode(y, 0.5); }

// ------------------------------------------------------------ grids and CV

std::vector<double> log_lambda_grid(double lo_exp, double hi_exp, int count) {
  require(count >= 1 && lo_exp <= hi_exp, ErrorKind::usage,
          "log_lambda_grid: need count >= 1 and lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * i / (count - 1);
    out[static_cast<std::size_t>(i)] = std::pow(10.0, e);
  }
  return out;
}

std::vector<Index> power_of_two_ranks(Index max_rank) {
  require(max_rank >= 1, ErrorKind::usage, "power_of_two_ranks: max_rank must be positive");
  std::vector<Index> out;
  for (Index p = 1; p <= max_rank; p *= 2) out.push_back(p);
  return out;
}

GridSpec GridSpec::defaults(Index max_rank) {
  return GridSpec{log_lambda_grid(-8.0, 1.0, 10), power_of_two_ranks(max_rank)};
}

void GridSpec::validate(Index max_rank) const {
  require(!lambdas.empty() && !ranks.empty(), ErrorKind::usage, "grid must be nonempty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] > 0.0 && std::isfinite(lambdas[i]), ErrorKind::usage,
            "grid lambdas must be positive");
    require(i == 0 || lambdas[i] > lambdas[i - 1], ErrorKind::usage,
            "grid lambdas must be strictly ascending");
  }
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    require(ranks[i] >= 1 && ranks[i] <= max_rank, ErrorKind::usage,
            "grid ranks must lie in [1, n]");
    require(i == 0 || ranks[i] > ranks[i - 1], ErrorKind::usage,
            "grid ranks must be strictly ascending");
  }
}

std::vector<Split> make_splits(Index n, const CvPlan& plan) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  require(plan.repeats >= 1, ErrorKind::usage, "cv plan: repeats must be at least 1");
  std::vector<Split> out;
  if (plan.holdout_fraction > 0.0) {
    require(plan.holdout_fraction < 1.0, ErrorKind::usage,
            "cv plan: holdout fraction must be in (0, 1)");
    require(n >= 2, ErrorKind::data, "cv plan: holdout needs at least two rows");
    const Index m = std::clamp<Index>(
        static_cast<Index>(std::llround(plan.holdout_fraction * static_cast<double>(n))), 1, n - 1);
    for (Index r = 0; r < plan.repeats; ++r) {
      const std::vector<Index> perm = Rng(derive_seed(plan.seed, static_cast<std::uint64_t>(r))).permutation(n);
      out.push_back(Split{sorted({perm.begin() + m, perm.end()}),
                          sorted({perm.begin(), perm.begin() + m})});
    }
    return out;
  }
  for (Index r = 0; r < plan.repeats; ++r) {
    auto folds = make_splits(rows, plan.folds, derive_seed(plan.seed, static_cast<std::uint64_t>(r)));
    out.insert(out.end(), folds.begin(), folds.end());
  }
  return out;
}

std::vector<Split> make_splits(const std::vector<Index>& rows, Index folds, std::uint64_t seed) {
  require(folds >= 2, ErrorKind::usage, "cv plan: folds must be at least 2");
  const auto n = static_cast<Index>(rows.size());
  require(n >= folds, ErrorKind::data, "cv plan: fewer rows than folds");
  const std::vector<Index> perm = Rng(seed).permutation(n);
  std::vector<Split> out(static_cast<std::size_t>(folds));
  for (Index i = 0; i < n; ++i) {
    const Index row = rows[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (Index f = 0; f < folds; ++f) {
      auto& s = out[static_cast<std::size_t>(f)];
      (i % folds == f ? s.validation : s.train).push_back(row);
    }
  }
  for (auto& s : out) {
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
  }
  return out;
}

std::string to_string(CvObjective objective) {
  switch (objective) {
    case CvObjective::val_mse_vs_y: return "val_mse_vs_y";
    case CvObjective::val_mse_vs_projected_y: return "val_mse_vs_projected_y";
    case CvObjective::val_mse_projected_vs_y: return "val_mse_projected_vs_y";
  }
  return "unknown";
}

void select_minimum(CvResult& result, const GridSpec& grid) {
  require(result.mean.rows() == static_cast<Index>(grid.lambdas.size()) &&
              result.mean.cols() == static_cast<Index>(grid.ranks.size()),
          ErrorKind::data, "score table does not match the grid");
  Index bi = 0;
  Index bj = 0;
  // Row-major scan in ascending lambda, then ascending rank: strict
  // improvement keeps the earliest minimum.
  for (Index i = 0; i < result.mean.rows(); ++i)
    for (Index j = 0; j < result.mean.cols(); ++j)
      if (result.mean(i, j) < result.mean(bi, bj)) {
        bi = i;
        bj = j;
      }
  result.lambda_index = bi;
  result.rank_index = bj;
  result.lambda = grid.lambdas[static_cast<std::size_t>(bi)];
  result.rank = grid.ranks[static_cast<std::size_t>(bj)];
}

CvResult cross_validate(const FoldScorer& scorer, const std::vector<Split>& splits,
                        const GridSpec& grid, CvObjective objective) {
  require(!grid.lambdas.empty() && !grid.ranks.empty(), ErrorKind::usage,
          "cross_validate: grid must be nonempty");
  require(!splits.empty(), ErrorKind::data, "cross_validate: no folds");
  std::vector<Matrix> tables;
  std::vector<double> weights;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    require(!splits[f].train.empty() && !splits[f].validation.empty(), ErrorKind::data,
            "cross_validate: empty fold");
    tables.push_back(scorer(static_cast<Index>(f), splits[f], objective));
    weights.push_back(static_cast<double>(splits[f].validation.size()));
  }
  return aggregate(tables, weights, grid);
}

CvResult cross_validate(const FoldScorer& scorer, Index n, const CvPlan& plan,
                        const GridSpec& grid, CvObjective objective) {
  return cross_validate(scorer, make_splits(n, plan), grid, objective);
}

NestedCvResult nested_cross_validate(const FoldScorer& scorer, Index n, const CvPlan& plan,
                                     const GridSpec& grid, CvObjective objective) {
  require(plan.inner_folds >= 2, ErrorKind::usage, "nested cv: inner folds must be at least 2");
  NestedCvResult out;
  out.outer = make_splits(n, plan);
  for (std::size_t f = 0; f < out.outer.size(); ++f) {
    const auto inner = make_splits(out.outer[f].train, plan.inner_folds,
                                   derive_seed(plan.seed, 1000 + static_cast<std::uint64_t>(f)));
    CvResult cv = cross_validate(scorer, inner, grid, objective);
    const Matrix outer_table = scorer(static_cast<Index>(f), out.outer[f], objective);
    out.outer_scores.push_back(outer_table(cv.lambda_index, cv.rank_index));
    out.inner.push_back(std::move(cv));
  }
  return out;
}

// ------------------------------------------------- per-split kernel evaluator

SplitEvaluator::SplitEvaluator(const KernelSpec& input_kernel, const KernelSpec& output_kernel,
                               const Matrix& x_train, const Matrix& y_train,
                               const Matrix& x_eval, const Matrix& y_eval)
    : output_kernel_(output_kernel),
      k_x_(gram(input_kernel, x_train)),
      k_z_(gram(output_kernel, y_train)),
      path_(k_x_, x_train),
      y_train_(y_train),
      y_eval_(y_eval) {
  require(x_train.rows() == y_train.rows() && x_eval.rows() == y_eval.rows(), ErrorKind::data,
          "SplitEvaluator: input and output counts differ");
  require(x_eval.rows() > 0, ErrorKind::data, "SplitEvaluator: no evaluation points");
  const Matrix& v = path_.basis();
  basis_t_kx_eval_ = v.transpose() * gram(input_kernel, x_train, x_eval).entries;
  k_z_cross_ = gram(output_kernel, y_train, y_eval).entries;
  basis_t_kz_eval_ = v.transpose() * k_z_cross_;
  eval_self_ = self_kernel(output_kernel, y_eval);
  if (output_kernel.family() == KernelFamily::linear && y_train.cols() < y_train.rows()) {
    basis_t_factor_ = v.transpose() * y_train;
    k_z_basis_ = y_train * basis_t_factor_.transpose();
  } else {
    k_z_basis_ = k_z_.entries * v;
    basis_t_kz_basis_ = v.transpose() * k_z_basis_;
  }
}

Matrix SplitEvaluator::filtered(double lambda) const {
  return path_.filter(lambda).asDiagonal() * basis_t_kx_eval_;
}

Matrix SplitEvaluator::coefficients(double lambda) const { return path_.basis() * filtered(lambda); }

Vector SplitEvaluator::fitted_sq_norms(const Matrix& fb) const {
  if (basis_t_factor_.size() > 0) return (basis_t_factor_.transpose() * fb).colwise().squaredNorm();
  return fb.cwiseProduct(basis_t_kz_basis_ * fb).colwise().sum();
}

Vector SplitEvaluator::cross_terms(const Matrix& fb) const {
  return fb.cwiseProduct(basis_t_kz_eval_).colwise().sum();
}

double SplitEvaluator::mse_vs_targets(double lambda) const {
  const Matrix fb = filtered(lambda);
  return (fitted_sq_norms(fb) - 2.0 * cross_terms(fb) + eval_self_).mean();
}

namespace {

ProjectionCoords coords_from(const SubspaceProjection& proj, const Matrix& k_z_cross,
                             const Matrix& basis) {
  ProjectionCoords out;
  out.provenance = proj.provenance;
  out.train = proj.projected_train_outputs;
  out.eval = projected_coordinates(proj, k_z_cross);
  out.train_t_basis = out.train.transpose() * basis;
  return out;
}

}  // namespace

ProjectionCoords SplitEvaluator::supervised_coords(double lambda1, Index rank) const {
  const SubspaceProjection proj = fit_supervised_projection(path_, lambda1, k_z_basis_, rank);
  return coords_from(proj, k_z_cross_, path_.basis());
}

ProjectionCoords SplitEvaluator::unsupervised_coords(Index rank) const {
  return coords_from(fit_unsupervised_projection(k_z_.entries, rank), k_z_cross_, path_.basis());
}

ProjectionCoords SplitEvaluator::oracle_coords(const Matrix& basis) const {
  require(output_kernel_.family() == KernelFamily::linear, ErrorKind::usage,
          "oracle projection needs the linear output kernel");
  require(basis.rows() == y_train_.cols(), ErrorKind::data,
          "oracle projection: basis dimension does not match the outputs");
  ProjectionCoords out;
  out.provenance = Provenance::oracle;
  out.train = y_train_ * basis;
  out.eval = y_eval_ * basis;
  out.train_t_basis = out.train.transpose() * path_.basis();
  return out;
}

Vector SplitEvaluator::mse_vs_projected_targets(double lambda, const ProjectionCoords& coords,
                                                const std::vector<Index>& ranks) const {
  const Matrix fb = filtered(lambda);
  const Matrix uh = coords.train_t_basis * fb;  // r × m
  const Vector inner = uh.cwiseProduct(coords.eval.transpose()).rowwise().sum();
  const Vector target_sq = coords.eval.colwise().squaredNorm().transpose();
  const double m = static_cast<double>(eval_size());
  return Vector::Constant(static_cast<Index>(ranks.size()), fitted_sq_norms(fb).mean()) +
         (prefix_at(target_sq, ranks) - 2.0 * prefix_at(inner, ranks)) / m;
}

Vector SplitEvaluator::projected_mse(double lambda, const ProjectionCoords& coords,
                                     const std::vector<Index>& ranks) const {
  const Matrix uh = coords.train_t_basis * filtered(lambda);
  const Vector inner = uh.cwiseProduct(coords.eval.transpose()).rowwise().sum();
  const Vector fitted_sq = uh.rowwise().squaredNorm();
  const double m = static_cast<double>(eval_size());
  return Vector::Constant(static_cast<Index>(ranks.size()), eval_self_.mean()) +
         (prefix_at(fitted_sq, ranks) - 2.0 * prefix_at(inner, ranks)) / m;
}

// ---------------------------------------------------- hyperparameter search

HyperparameterSelection select_hyperparameters(const std::vector<SplitEvaluator>& evaluators,
                                               const GridSpec& grid,
                                               const std::vector<Provenance>& provenances,
                                               const Matrix* oracle_basis) {
  require(!evaluators.empty(), ErrorKind::data, "select_hyperparameters: no splits");
  require(!grid.lambdas.empty() && !grid.ranks.empty(), ErrorKind::usage,
          "select_hyperparameters: grid must be nonempty");
  const auto n_l = static_cast<Index>(grid.lambdas.size());
  const auto n_p = static_cast<Index>(grid.ranks.size());
  std::vector<double> weights;
  for (const auto& e : evaluators) weights.push_back(static_cast<double>(e.eval_size()));

  HyperparameterSelection out;
  {
    std::vector<Matrix> tables;
    for (const auto& e : evaluators) {
      Matrix t(n_l, n_p);
      for (Index i = 0; i < n_l; ++i)
        t.row(i).setConstant(e.mse_vs_targets(grid.lambdas[static_cast<std::size_t>(i)]));
      tables.push_back(std::move(t));
    }
    out.lambda1 = aggregate(tables, weights, grid);
  }

  const Index max_rank = grid.ranks.back();
  for (Provenance prov : provenances) {
    std::vector<Matrix> vs_projected;
    std::vector<Matrix> projected_vs;
    for (const auto& e : evaluators) {
      ProjectionCoords coords;
      switch (prov) {
        case Provenance::supervised:
          coords = e.supervised_coords(out.lambda1.lambda, max_rank);
          break;
        case Provenance::unsupervised: coords = e.unsupervised_coords(max_rank); break;
        case Provenance::oracle:
          require(oracle_basis != nullptr, ErrorKind::usage,
                  "select_hyperparameters: oracle projection needs a basis");
          coords = e.oracle_coords(
              oracle_basis->leftCols(std::min<Index>(max_rank, oracle_basis->cols())));
          break;
      }
      Matrix a(n_l, n_p);
      Matrix b(n_l, n_p);
      for (Index i = 0; i < n_l; ++i) {
        const double lambda = grid.lambdas[static_cast<std::size_t>(i)];
        a.row(i) = e.mse_vs_projected_targets(lambda, coords, grid.ranks).transpose();
        b.row(i) = e.projected_mse(lambda, coords, grid.ranks).transpose();
      }
      vs_projected.push_back(std::move(a));
      projected_vs.push_back(std::move(b));
    }

    RankSelection sel;
    sel.provenance = prov;
    sel.projected_targets = aggregate(vs_projected, weights, grid);
    const CvResult estimator = aggregate(projected_vs, weights, grid);
    sel.estimator_scores.resize(n_p);
    sel.estimator_stderr.resize(n_p);
    for (Index j = 0; j < n_p; ++j) {
      Index best = 0;
      for (Index i = 1; i < n_l; ++i)
        if (sel.projected_targets.mean(i, j) < sel.projected_targets.mean(best, j)) best = i;
      sel.lambda2_index.push_back(best);
      sel.lambda2.push_back(grid.lambdas[static_cast<std::size_t>(best)]);
      sel.estimator_scores(j) = estimator.mean(best, j);
      sel.estimator_stderr(j) = estimator.stderr_(best, j);
    }
    for (Index j = 1; j < n_p; ++j)
      if (sel.estimator_scores(j) < sel.estimator_scores(sel.selected)) sel.selected = j;
    out.projections.push_back(std::move(sel));
  }
  return out;
}

void ExperimentReport::extend(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

// ------------------------------------------------------- synthetic protocol

const EstimatorCurve* SyntheticExperimentResult::curve(Provenance p) const {
  for (const auto& c : curves)
    if (c.provenance == p) return &c;
  return nullptr;
}

namespace {

enum SampleTag : std::uint64_t {
  kTagTrain = 100,
  kTagValidation = 101,
  kTagTest = 102,
};

GridSpec resolve_grid(GridSpec grid, Index max_rank) {
  const GridSpec d = GridSpec::defaults(max_rank);
  if (grid.lambdas.empty()) grid.lambdas = d.lambdas;
  if (grid.ranks.empty()) grid.ranks = d.ranks;
  grid.validate(max_rank);
  return grid;
}

std::vector<SplitEvaluator> build_evaluators(const KernelSpec& kx, const KernelSpec& kz,
                                             const Matrix& x, const Matrix& y,
                                             const std::vector<Split>& splits) {
  std::vector<SplitEvaluator> out;
  out.reserve(splits.size());
  for (const Split& s : splits)
    out.emplace_back(kx, kz, take_rows(x, s.train), take_rows(y, s.train),
                     take_rows(x, s.validation), take_rows(y, s.validation));
  return out;
}

}  // namespace

SyntheticExperimentResult run_synthetic_experiment(const SyntheticExperimentConfig& cfg) {
  const SyntheticProblemSpec& spec = cfg.problem;
  require(spec.n_train >= 2 && spec.n_test >= 1, ErrorKind::usage,
          "synthetic experiment needs n_train >= 2 and n_test >= 1");
  const bool needs_oracle = std::find(cfg.projections.begin(), cfg.projections.end(),
                                      Provenance::oracle) != cfg.projections.end();
  require(!needs_oracle || cfg.output_kernel.family() == KernelFamily::linear, ErrorKind::usage,
          "oracle projection needs the linear output kernel");

  const SyntheticProblem problem = build_problem(spec);
  const Dataset train = sample_dataset(problem, spec.n_train, derive_seed(spec.seed, kTagTrain));
  const Dataset test = sample_dataset(problem, spec.n_test, derive_seed(spec.seed, kTagTest));

  SyntheticExperimentResult out;
  out.seed = spec.seed;
  out.n_train = spec.n_train;

  // Selection splits: the independent validation sample, or folds of the
  // training sample.
  Dataset validation;
  std::vector<Split> splits;
  Index selection_train = spec.n_train;
  if (spec.n_val > 0) {
    validation = sample_dataset(problem, spec.n_val, derive_seed(spec.seed, kTagValidation));
  } else {
    CvPlan plan = cfg.plan;
    plan.seed = derive_seed(spec.seed, plan.seed);
    splits = make_splits(spec.n_train, plan);
    for (const Split& s : splits)
      selection_train = std::min<Index>(selection_train, static_cast<Index>(s.train.size()));
  }
  Index rank_cap = selection_train;
  if (cfg.output_kernel.family() == KernelFamily::linear) rank_cap = std::min(rank_cap, spec.d);
  out.grid = resolve_grid(cfg.grid, rank_cap);

  const auto evaluators_for = [&](const Matrix& y_train, const Matrix& y_val) {
    if (spec.n_val > 0) {
      std::vector<SplitEvaluator> e;
      e.emplace_back(cfg.input_kernel, cfg.output_kernel, train.x, y_train, validation.x, y_val);
      return e;
    }
    return build_evaluators(cfg.input_kernel, cfg.output_kernel, train.x, y_train, splits);
  };

  Matrix oracle_basis;
  const Matrix signal = problem.signal_covariance();
  const SpectralDecomposition signal_dec = eigh(signal);
  if (needs_oracle) oracle_basis = signal_dec.eigenvectors;

  auto start = std::chrono::steady_clock::now();
  const HyperparameterSelection sel = [&] {
    const auto evaluators = evaluators_for(train.y, validation.y);
    return select_hyperparameters(evaluators, out.grid, cfg.projections,
                                  needs_oracle ? &oracle_basis : nullptr);
  }();
  const std::int64_t selection_ns = cfg.record_timings ? elapsed_ns(start) : 0;
  out.lambda1 = sel.lambda1.lambda;

  start = std::chrono::steady_clock::now();
  const SplitEvaluator final_eval(cfg.input_kernel, cfg.output_kernel, train.x, train.y, test.x,
                                  test.y);
  out.krr_test_mse = final_eval.mse_vs_targets(out.lambda1);
  const std::int64_t final_ns = cfg.record_timings ? elapsed_ns(start) : 0;

  const auto row = [&](Index p, double l1, double l2, std::string metric, double value,
                       std::int64_t ns = 0) {
    out.report.append(ReportRow{cfg.experiment_id, spec.seed, spec.n_train, p, l1, l2,
                                std::move(metric), value, ns});
  };
  row(0, out.lambda1, out.lambda1, "test_mse/krr", out.krr_test_mse, final_ns);

  if (cfg.denoised) {
    start = std::chrono::steady_clock::now();
    const auto evaluators = evaluators_for(train.y_clean, validation.y_clean);
    GridSpec lambda_only{out.grid.lambdas, {out.grid.ranks.front()}};
    const HyperparameterSelection den = select_hyperparameters(evaluators, lambda_only, {});
    out.denoised_lambda = den.lambda1.lambda;
    const SplitEvaluator den_eval(cfg.input_kernel, cfg.output_kernel, train.x, train.y_clean,
                                  test.x, test.y);
    out.denoised_test_mse = den_eval.mse_vs_targets(out.denoised_lambda);
    row(0, out.denoised_lambda, out.denoised_lambda, "test_mse/denoised", out.denoised_test_mse,
        cfg.record_timings ? elapsed_ns(start) : 0);
  }

  const Index max_rank = out.grid.ranks.back();
  for (const RankSelection& rs : sel.projections) {
    ProjectionCoords coords;
    switch (rs.provenance) {
      case Provenance::supervised: coords = final_eval.supervised_coords(out.lambda1, max_rank); break;
      case Provenance::unsupervised: coords = final_eval.unsupervised_coords(max_rank); break;
      case Provenance::oracle:
        coords = final_eval.oracle_coords(
            oracle_basis.leftCols(std::min<Index>(max_rank, oracle_basis.cols())));
        break;
    }
    EstimatorCurve curve;
    curve.provenance = rs.provenance;
    curve.ranks = out.grid.ranks;
    curve.lambda2 = rs.lambda2;
    const std::string name = to_string(rs.provenance);
    for (std::size_t j = 0; j < out.grid.ranks.size(); ++j) {
      const Index p = out.grid.ranks[j];
      const double test_mse = final_eval.projected_mse(rs.lambda2[j], coords, {p})(0);
      const double val_mse = rs.estimator_scores(static_cast<Index>(j));
      curve.validation_mse.push_back(val_mse);
      curve.test_mse.push_back(test_mse);
      row(p, out.lambda1, rs.lambda2[j], "test_mse/" + name, test_mse);
      row(p, out.lambda1, rs.lambda2[j], "val_mse/" + name, val_mse);
      const double val_projected =
          rs.projected_targets.mean(rs.lambda2_index[j], static_cast<Index>(j));
      curve.validation_vs_projected_y.push_back(val_projected);
      row(p, out.lambda1, rs.lambda2[j], "val_mse_vs_projected_y/" + name, val_projected);
    }
    curve.selected_rank = out.grid.ranks[static_cast<std::size_t>(rs.selected)];
    row(curve.selected_rank, out.lambda1, rs.lambda2[static_cast<std::size_t>(rs.selected)],
        "selected_rank/" + name, static_cast<double>(curve.selected_rank), selection_ns);
    out.curves.push_back(std::move(curve));
  }

  out.signal_spectrum = signal_dec.eigenvalues;
  out.noise_spectrum = eigvalsh(problem.e);
  out.noise_along_signal =
      (signal_dec.eigenvectors.transpose() * problem.e * signal_dec.eigenvectors).diagonal();
  return out;
}

// ------------------------------------------------------ structured protocol

double mean_labels_per_example(const Matrix& y) {
  require(y.rows() > 0, ErrorKind::data, "mean_labels_per_example: no rows");
  return y.sum() / static_cast<double>(y.rows());
}

bool is_binary(const Matrix& y) {
  return (y.array() == 0.0 || y.array() == 1.0).all();
}

StructuredExperimentResult run_structured_experiment(const Matrix& x, const Matrix& y,
                                                     const StructuredExperimentConfig& cfg) {
  const Index n = x.rows();
  require(n == y.rows(), ErrorKind::data, "structured experiment: input and output counts differ");
  require(n >= 2, ErrorKind::data, "structured experiment: need at least two examples");
  require(cfg.provenance != Provenance::oracle, ErrorKind::usage,
          "structured experiment: oracle projection is synthetic-only");
  StructuredExperimentResult out;
  out.multilabel = is_binary(y);
  if (cfg.output_kernel_set) {
    out.output_kernel = cfg.output_kernel;
  } else {
    require(out.multilabel, ErrorKind::usage,
            "structured experiment: output kernel must be given for non-binary outputs");
    const double l_bar = mean_labels_per_example(y);
    require(l_bar > 0.0, ErrorKind::data, "structured experiment: no positive labels");
    out.output_kernel = KernelSpec::gaussian(l_bar);
  }
  const KernelSpec& kx = cfg.input_kernel;
  const KernelSpec& kz = out.output_kernel;
  Index kmax = 1;
  for (Index k : cfg.topk) {
    require(k >= 1, ErrorKind::usage, "structured experiment: top-k values must be positive");
    kmax = std::max(kmax, k);
  }

  const std::vector<Split> outer = make_splits(n, cfg.plan);
  for (std::size_t f = 0; f < outer.size(); ++f) {
    const Split& split = outer[f];
    const Matrix x_tr = take_rows(x, split.train);
    const Matrix y_tr = take_rows(y, split.train);
    const Matrix x_te = take_rows(x, split.validation);
    const Matrix y_te = take_rows(y, split.validation);
    const Index n_tr = x_tr.rows();
    const Index m = x_te.rows();

    StructuredFoldResult fr;
    fr.fold = static_cast<Index>(f);
    const bool single = cfg.grid.lambdas.size() == 1 && cfg.grid.ranks.size() == 1;
    if (single) {
      cfg.grid.validate(std::numeric_limits<Index>::max());
      fr.lambda1 = fr.lambda2 = cfg.grid.lambdas.front();
      fr.rank = cfg.grid.ranks.front();
    } else {
      require(cfg.plan.inner_folds >= 2, ErrorKind::usage,
              "structured experiment: a grid search needs inner_folds >= 2");
      std::vector<Index> rows(static_cast<std::size_t>(n_tr));
      std::iota(rows.begin(), rows.end(), Index{0});
      const auto inner = make_splits(rows, cfg.plan.inner_folds,
                                     derive_seed(cfg.plan.seed, 1000 + static_cast<std::uint64_t>(f)));
      Index cap = n_tr;
      for (const Split& s : inner) cap = std::min<Index>(cap, static_cast<Index>(s.train.size()));
      const GridSpec grid = resolve_grid(cfg.grid, cap);
      const auto evaluators = build_evaluators(kx, kz, x_tr, y_tr, inner);
      const HyperparameterSelection sel = select_hyperparameters(evaluators, grid, {cfg.provenance});
      const RankSelection& rs = sel.projections.front();
      fr.lambda1 = sel.lambda1.lambda;
      fr.lambda2 = rs.lambda2[static_cast<std::size_t>(rs.selected)];
      fr.rank = grid.ranks[static_cast<std::size_t>(rs.selected)];
    }

    auto start = std::chrono::steady_clock::now();
    const GramMatrix k_x = gram(kx, x_tr);
    const RidgeModel full_model = fit_krr(k_x, fr.lambda1);
    const RidgeModel reduced_model =
        fr.lambda2 == fr.lambda1 ? full_model : fit_krr(k_x, fr.lambda2);
    const Matrix k_z = gram(kz, y_tr).entries;
    const SubspaceProjection proj =
        cfg.provenance == Provenance::supervised
            ? fit_supervised_projection(full_model, k_x.entries, k_z, fr.rank)
            : fit_unsupervised_projection(k_z, fr.rank);
    fr.fit_ns = elapsed_ns(start);

    Matrix cand = y_tr;
    if (cfg.candidates == CandidatePolicy::training_and_test_outputs) {
      cand.resize(n_tr + m, y.cols());
      cand << y_tr, y_te;
    }
    const CandidateSet candidates = CandidateSet::build(kz, cand);
    const Matrix k_z_tr_c = gram(kz, y_tr, candidates.candidates).entries;
    const Matrix uy_c = projected_coordinates(proj, k_z_tr_c);
    const ReducedDecoder reduced(reduced_model, proj, uy_c, candidates);
    const FullRankDecoder fullrank(full_model, k_z_tr_c, candidates);
    const Matrix k_x_te = gram(kx, x_tr, x_te).entries;

    std::vector<std::vector<Index>> ranked_red(static_cast<std::size_t>(m));
    std::vector<std::vector<Index>> ranked_full(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
      const Vector col = k_x_te.col(j);
      DecodeResult r = reduced.decode(col, kmax);
      DecodeResult q = fullrank.decode(col, kmax);
      fr.decode_reduced_ns += r.timing_ns;
      fr.decode_fullrank_ns += q.timing_ns;
      ranked_red[static_cast<std::size_t>(j)] = std::move(r.ranked_positions);
      ranked_full[static_cast<std::size_t>(j)] = std::move(q.ranked_positions);
    }

    const auto evaluate = [&](const std::vector<std::vector<Index>>& ranked, double& f1,
                              double& rbf, std::vector<double>& topk) {
      Matrix pred(m, y.cols());
      for (Index j = 0; j < m; ++j) pred.row(j) = cand.row(ranked[static_cast<std::size_t>(j)].front());
      double loss = 0.0;
      for (Index j = 0; j < m; ++j) {
        const Vector a = pred.row(j).transpose();
        const Vector b = y_te.row(j).transpose();
        loss += rbf_loss(kz, {a.data(), static_cast<std::size_t>(a.size())},
                         {b.data(), static_cast<std::size_t>(b.size())});
      }
      rbf = loss / static_cast<double>(m);
      f1 = out.multilabel ? f1_example_based(label_sets(y_te), label_sets(pred)) : 0.0;
      if (cfg.candidates == CandidatePolicy::training_and_test_outputs) {
        std::vector<Index> truth(static_cast<std::size_t>(m));
        std::iota(truth.begin(), truth.end(), n_tr);
        for (Index k : cfg.topk) topk.push_back(topk_accuracy(ranked, truth, k));
      }
    };
    evaluate(ranked_red, fr.f1_reduced, fr.rbf_loss_reduced, fr.topk_reduced);
    evaluate(ranked_full, fr.f1_fullrank, fr.rbf_loss_fullrank, fr.topk_fullrank);

    const auto row = [&](Index p, double l2, std::string metric, double value, std::int64_t ns) {
      out.report.append(ReportRow{cfg.experiment_id, cfg.plan.seed, n_tr, p, fr.lambda1, l2,
                                  std::move(metric), value, cfg.record_timings ? ns : 0});
    };
    row(fr.rank, fr.lambda2, "selected_rank", static_cast<double>(fr.rank), fr.fit_ns);
    if (out.multilabel) {
      row(fr.rank, fr.lambda2, "f1/reduced", fr.f1_reduced, fr.decode_reduced_ns);
      row(0, fr.lambda1, "f1/fullrank", fr.f1_fullrank, fr.decode_fullrank_ns);
    }
    row(fr.rank, fr.lambda2, "rbf_loss/reduced", fr.rbf_loss_reduced, fr.decode_reduced_ns);
    row(0, fr.lambda1, "rbf_loss/fullrank", fr.rbf_loss_fullrank, fr.decode_fullrank_ns);
    for (std::size_t i = 0; i < fr.topk_reduced.size(); ++i) {
      const std::string k = std::to_string(cfg.topk[i]);
      row(fr.rank, fr.lambda2, "top" + k + "/reduced", fr.topk_reduced[i], 0);
      row(0, fr.lambda1, "top" + k + "/fullrank", fr.topk_fullrank[i], 0);
    }
    out.folds.push_back(std::move(fr));
  }
  return out;
}

}  // namespace rriokr

#include "rriokr/structpred.hpp"

#include "rriokr/random.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace rriokr {

namespace {

void check_candidates(const Vector& self_kernel, const std::vector<Index>& ids) {
  require(self_kernel.size() > 0, ErrorKind::data, "decode: empty candidate set");
  require(static_cast<Index>(ids.size()) == self_kernel.size(), ErrorKind::data,
          "decode: candidate ids do not match the candidate set");
}

std::int64_t elapsed_ns(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

CandidateSet CandidateSet::build(const KernelSpec& output_kernel, Matrix candidates,
                                 std::vector<Index> ids) {
  require(candidates.rows() > 0, ErrorKind::data, "candidate set is empty");
  if (ids.empty()) {
    ids.resize(static_cast<std::size_t>(candidates.rows()));
    std::iota(ids.begin(), ids.end(), Index{0});
  }
  require(static_cast<Index>(ids.size()) == candidates.rows(), ErrorKind::data,
          "candidate ids do not match the candidate rows");
  CandidateSet out;
  out.self_kernel = rriokr::self_kernel(output_kernel, candidates);
  out.candidates = std::move(candidates);
  out.ids = std::move(ids);
  return out;
}

Matrix project_candidates(const SubspaceProjection& proj, const Matrix& w, const Matrix& k_x,
                          const Matrix& k_z_tr_c) {
  const Index n = proj.train_size();
  require(w.rows() == n && k_x.rows() == w.cols() && k_x.cols() == n && k_z_tr_c.rows() == n,
          ErrorKind::data, "project_candidates: dimension mismatch");
  // (W K_x K_z^{tr/c})^T beta with the n×n product formed first.
  const Matrix wk = w * k_x;
  return k_z_tr_c.transpose() * (wk * proj.beta);
}

Matrix project_candidates(const SubspaceProjection& proj, const Matrix& k_z_tr_c) {
  return projected_coordinates(proj, k_z_tr_c);
}

DecodeResult rank_distances(const Vector& d, const std::vector<Index>& ids, Index k) {
  require(k >= 1, ErrorKind::usage, "decode: k must be at least 1");
  require(d.size() > 0, ErrorKind::data, "decode: empty candidate set");
  const Index n_c = d.size();
  const Index top = std::min(k, n_c);
  const auto before = [&d](Index a, Index b) {
    return d(a) < d(b) || (d(a) == d(b) && a < b);
  };
  DecodeResult out;
  if (top == 1) {
    Index best = 0;
    for (Index i = 1; i < n_c; ++i)
      if (before(i, best)) best = i;
    out.ranked_positions = {best};
  } else {
    std::vector<Index> order(static_cast<std::size_t>(n_c));
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + top, order.end(), before);
    order.resize(static_cast<std::size_t>(top));
    out.ranked_positions = std::move(order);
  }
  out.ranked_ids.reserve(out.ranked_positions.size());
  out.distances.reserve(out.ranked_positions.size());
  for (Index pos : out.ranked_positions) {
    out.ranked_ids.push_back(ids[static_cast<std::size_t>(pos)]);
    out.distances.push_back(d(pos));
  }
  return out;
}

namespace {

// Ranks every column; the elapsed time is split evenly over the batch.
std::vector<DecodeResult> rank_columns(const Matrix& d, const std::vector<Index>& ids, Index k,
                                       std::chrono::steady_clock::time_point start) {
  std::vector<DecodeResult> out;
  out.reserve(static_cast<std::size_t>(d.cols()));
  for (Index j = 0; j < d.cols(); ++j) out.push_back(rank_distances(d.col(j), ids, k));
  const std::int64_t share = elapsed_ns(start) / std::max<Index>(d.cols(), 1);
  for (DecodeResult& r : out) r.timing_ns = share;
  return out;
}

}  // namespace

DecodeResult decode_reduced(const RidgeModel& model, const SubspaceProjection& proj,
                            const Matrix& uy_c, const Vector& k_x_test,
                            const CandidateSet& candidates, Index k) {
  check_candidates(candidates.self_kernel, candidates.ids);
  require(uy_c.rows() == candidates.size() && uy_c.cols() == proj.rank(), ErrorKind::data,
          "decode_reduced: candidate projection does not match");
  require(proj.train_size() == model.size(), ErrorKind::data,
          "decode_reduced: projection and model differ in training size");
  const auto start = std::chrono::steady_clock::now();
  const Vector alpha = model.coefficients(k_x_test);
  const Vector uh = proj.projected_train_outputs.transpose() * alpha;
  const Vector s = uy_c * uh;
  const Vector d = candidates.self_kernel - 2.0 * s;
  DecodeResult out = rank_distances(d, candidates.ids, k);
  out.timing_ns = elapsed_ns(start);
  return out;
}

DecodeResult decode_fullrank(const RidgeModel& model, const Matrix& k_z_tr_c,
                             const Vector& k_x_test, const CandidateSet& candidates, Index k) {
  check_candidates(candidates.self_kernel, candidates.ids);
  require(k_z_tr_c.rows() == model.size() && k_z_tr_c.cols() == candidates.size(),
          ErrorKind::data, "decode_fullrank: cross Gram does not match");
  const auto start = std::chrono::steady_clock::now();
  const Vector alpha = model.coefficients(k_x_test);
  const Vector s = k_z_tr_c.transpose() * alpha;
  const Vector d = candidates.self_kernel - 2.0 * s;
  DecodeResult out = rank_distances(d, candidates.ids, k);
  out.timing_ns = elapsed_ns(start);
  return out;
}

ReducedDecoder::ReducedDecoder(const RidgeModel& model, const SubspaceProjection& proj,
                               Matrix uy_c, const CandidateSet& candidates)
    : test_map_(proj.projected_train_outputs.transpose() * model.ridge_inverse()),
      uy_c_(std::move(uy_c)),
      self_kernel_(candidates.self_kernel),
      ids_(candidates.ids) {
  check_candidates(self_kernel_, ids_);
  require(proj.train_size() == model.size(), ErrorKind::data,
          "ReducedDecoder: projection and model differ in training size");
  require(uy_c_.rows() == candidates.size() && uy_c_.cols() == proj.rank(), ErrorKind::data,
          "ReducedDecoder: candidate projection does not match");
}

Vector ReducedDecoder::project_test(const Vector& k_x_test) const {
  require(k_x_test.size() == test_map_.cols(), ErrorKind::data,
          "decode: kernel column length does not match the model");
  return test_map_ * k_x_test;
}

DecodeResult ReducedDecoder::decode(const Vector& k_x_test, Index k) const {
  const auto start = std::chrono::steady_clock::now();
  const Vector uh = project_test(k_x_test);
  Vector d = self_kernel_;
  d.noalias() -= 2.0 * (uy_c_ * uh);
  DecodeResult out = rank_distances(d, ids_, k);
  out.timing_ns = elapsed_ns(start);
  return out;
}

std::vector<DecodeResult> ReducedDecoder::decode_block(const Matrix& k_x_test, Index k) const {
  require(k_x_test.rows() == test_map_.cols(), ErrorKind::data,
          "decode: kernel block rows do not match the model");
  const auto start = std::chrono::steady_clock::now();
  Matrix d = (-2.0) * (uy_c_ * (test_map_ * k_x_test));
  d.colwise() += self_kernel_;
  return rank_columns(d, ids_, k, start);
}

FullRankDecoder::FullRankDecoder(const RidgeModel& model, Matrix k_z_tr_c,
                                 const CandidateSet& candidates)
    : w_(model.ridge_inverse()),
      k_z_tr_c_(std::move(k_z_tr_c)),
      self_kernel_(candidates.self_kernel),
      ids_(candidates.ids) {
  check_candidates(self_kernel_, ids_);
  require(k_z_tr_c_.rows() == model.size() && k_z_tr_c_.cols() == candidates.size(),
          ErrorKind::data, "FullRankDecoder: cross Gram does not match");
}

DecodeResult FullRankDecoder::decode(const Vector& k_x_test, Index k) const {
  require(k_x_test.size() == w_.cols(), ErrorKind::data,
          "decode: kernel column length does not match the model");
  const auto start = std::chrono::steady_clock::now();
  const Vector alpha = w_ * k_x_test;
  Vector d = self_kernel_;
  d.noalias() -= 2.0 * (k_z_tr_c_.transpose() * alpha);
  DecodeResult out = rank_distances(d, ids_, k);
  out.timing_ns = elapsed_ns(start);
  return out;
}

std::vector<DecodeResult> FullRankDecoder::decode_block(const Matrix& k_x_test, Index k) const {
  require(k_x_test.rows() == w_.cols(), ErrorKind::data,
          "decode: kernel block rows do not match the model");
  const auto start = std::chrono::steady_clock::now();
  Matrix d = (-2.0) * (k_z_tr_c_.transpose() * (w_ * k_x_test));
  d.colwise() += self_kernel_;
  return rank_columns(d, ids_, k, start);
}

double rbf_loss(const KernelSpec& output_kernel, std::span<const double> z,
                std::span<const double> z_prime) {
  return eval_kernel(output_kernel, z, z) + eval_kernel(output_kernel, z_prime, z_prime) -
         2.0 * eval_kernel(output_kernel, z, z_prime);
}

std::string to_string(DecodeVariant v) {
  return v == DecodeVariant::reduced ? "reduced" : "fullrank";
}

TimingRow timing_probe(DecodeVariant variant, Index n, Index n_candidates, Index p,
                       const TimingProbeConfig& cfg) {
  require(n >= 1 && n_candidates >= 1 && p >= 1 && p <= n, ErrorKind::usage,
          "timing_probe: need n, n_c >= 1 and 1 <= p <= n");
  require(cfg.test_points >= 1 && cfg.repetitions >= 1, ErrorKind::usage,
          "timing_probe: need at least one test point and one repetition");
  Rng rng(cfg.seed);
  const Matrix half = rng.normal_matrix(n, n) / static_cast<double>(n);
  const RidgeModel model(half * half.transpose(), 1.0, KernelSpec::linear());
  const CandidateSet candidates =
      CandidateSet::build(KernelSpec::linear(), rng.normal_matrix(n_candidates, 4));
  const Matrix k_test = rng.normal_matrix(n, cfg.test_points);

  std::vector<double> per_point;
  per_point.reserve(static_cast<std::size_t>(cfg.repetitions));
  const auto run = [&](const auto& decoder) {
    double sink = 0.0;
    for (Index r = 0; r < cfg.repetitions; ++r) {
      const auto start = std::chrono::steady_clock::now();
      for (const DecodeResult& res : decoder.decode_block(k_test, cfg.k)) sink += res.distances.front();
      per_point.push_back(static_cast<double>(elapsed_ns(start)) /
                          static_cast<double>(cfg.test_points));
    }
    return sink;
  };

  if (variant == DecodeVariant::reduced) {
    SubspaceProjection proj;
    proj.requested_rank = p;
    proj.beta = rng.normal_matrix(n, p);
    proj.output_map = proj.beta;
    proj.projected_train_outputs = rng.normal_matrix(n, p);
    proj.kept_eigenvalues = Vector::Ones(p);
    const ReducedDecoder decoder(model, proj, rng.normal_matrix(n_candidates, p), candidates);
    run(decoder);
  } else {
    const FullRankDecoder decoder(model, rng.normal_matrix(n, n_candidates), candidates);
    run(decoder);
  }

  std::sort(per_point.begin(), per_point.end());
  const std::size_t mid = per_point.size() / 2;
  const double median = per_point.size() % 2 == 1
                            ? per_point[mid]
                            : 0.5 * (per_point[mid - 1] + per_point[mid]);
  return TimingRow{variant, n, n_candidates, p, cfg.test_points, cfg.repetitions, median};
}

}  // namespace rriokr

#include "rriokr/regression.hpp"
#include "support.hpp"

using namespace rriokr;
using testing::max_abs_diff;
using testing::random_matrix;

namespace {

GramMatrix linear_gram(const Matrix& x) { return gram(KernelSpec::linear(), x); }

}  // namespace

TEST_SUITE("regression") {
  TEST_CASE("fit_krr scalar closed form") {
    Matrix x(1, 1);
    x << 1.0;
    const RidgeModel m = fit_krr(linear_gram(x), 0.25);
    CHECK(m.ridge_inverse()(0, 0) == doctest::Approx(1.0 / 1.25).epsilon(1e-15));
    Vector k(1);
    k << 1.0;
    CHECK(predict_coefficients(m, k)(0) == doctest::Approx(1.0 / 1.25).epsilon(1e-15));
    CHECK(predict_coefficients(m, Vector::Zero(1))(0) == 0.0);
  }

  TEST_CASE("fit_krr on an identity gram") {
    const Index n = 6;
    const double lambda = 0.1;
    const RidgeModel m = fit_krr(linear_gram(Matrix::Identity(n, n)), lambda);
    CHECK(max_abs_diff(m.ridge_inverse(), Matrix::Identity(n, n) / (1.0 + n * lambda)) <= 1e-14);
  }

  TEST_CASE("linear KRR equals explicit ridge regression") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Matrix x = random_matrix(5, 3, seed);
      const Matrix y = random_matrix(5, 2, seed + 100);
      const Matrix xt = random_matrix(4, 3, seed + 200);
      const double lambda = 0.03;
      const RidgeModel m = fit_krr(linear_gram(x), lambda);
      const Matrix alpha = m.coefficients(Matrix(gram(KernelSpec::linear(), x, xt).entries));
      const Matrix pred = alpha.transpose() * y;
      const Matrix oracle = xt * testing::explicit_ridge(x, y, lambda);
      CHECK(max_abs_diff(pred, oracle) <= 1e-8);
    }
  }

  TEST_CASE("predict_coefficients is W k_x") {
    const Matrix x = random_matrix(3, 2, 4);
    const RidgeModel m = fit_krr(gram(KernelSpec::gaussian(1.0), x), 0.2);
    const Vector k = random_matrix(3, 1, 5).col(0);
    CHECK(max_abs_diff(predict_coefficients(m, k), m.ridge_inverse() * k) <= 1e-10);
    CHECK_THROWS_AS(predict_coefficients(m, Vector::Zero(4)), Error);
  }

  TEST_CASE("ridge inverse invariants") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const Index n = 40;
      const Matrix x = random_matrix(n, 5, seed);
      const GramMatrix k = gram(KernelSpec::gaussian(2.0), x);
      const double lambda = 1e-3;
      const RidgeModel m = fit_krr(k, lambda);
      const Matrix& w = m.ridge_inverse();
      CHECK(max_abs_diff(w, w.transpose()) <= 1e-8);
      Matrix shifted = k.entries;
      shifted.diagonal().array() += n * lambda;
      CHECK(max_abs_diff(w * shifted, Matrix::Identity(n, n)) <= 1e-6);
      const Vector ev = testing::eigenvalues_desc(w);
      CHECK(ev(n - 1) > 0.0);
      CHECK(ev(0) <= (1.0 / (n * lambda)) * (1.0 + 1e-10));
    }
  }

  TEST_CASE("KRR interpolates as lambda goes to zero") {
    const Index n = 20;
    const Matrix x = random_matrix(n, 3, 1);
    const Matrix y = random_matrix(n, 2, 2);
    const GramMatrix k = gram(KernelSpec::gaussian(1.0), x);
    const RidgeModel m = fit_krr(k, 1e-10);
    const Matrix fitted = (m.coefficients(k.entries)).transpose() * y;
    CHECK((fitted - y).squaredNorm() / n <= 1e-6);
  }

  TEST_CASE("fit_krr errors") {
    const GramMatrix k = linear_gram(random_matrix(3, 2, 1));
    CHECK_THROWS_AS(fit_krr(k, 0.0), Error);
    CHECK_THROWS_AS(fit_krr(k, -1.0), Error);
  }

  TEST_CASE("ridge path agrees with direct fits") {
    const Matrix x = random_matrix(30, 4, 7);
    const GramMatrix k = gram(KernelSpec::gaussian(3.0), x);
    const RidgePath path(k);
    for (double lambda : {1e-6, 1e-3, 1.0}) {
      const Matrix direct = fit_krr(k, lambda).ridge_inverse();
      CHECK(max_abs_diff(path.model(lambda).ridge_inverse(), direct) <= 1e-8 * direct.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(path.filter(0.0), Error);
  }

  TEST_CASE("thin ridge path for the linear kernel") {
    const Matrix x = random_matrix(40, 6, 17);
    const GramMatrix k = gram(KernelSpec::linear(), x);
    const RidgePath thin(k, x);
    CHECK(thin.basis().rows() == 40);
    CHECK(thin.basis().cols() == 6);
    CHECK(thin.size() == 40);
    for (double lambda : {1e-6, 1e-3, 1.0}) {
      const Matrix direct = fit_krr(k, lambda).ridge_inverse();
      CHECK(max_abs_diff(thin.model(lambda).ridge_inverse(), direct) <= 1e-8 * direct.cwiseAbs().maxCoeff());
    }
    // More features than rows keeps the full eigenbasis.
    const Matrix wide = random_matrix(5, 9, 18);
    CHECK(RidgePath(gram(KernelSpec::linear(), wide), wide).basis().cols() == 5);
  }

  TEST_CASE("nystrom with all anchors reproduces exact KRR") {
    const Index n = 25;
    const Matrix x = random_matrix(n, 3, 3);
    const Matrix xt = random_matrix(7, 3, 4);
    const KernelSpec kern = KernelSpec::gaussian(2.0);
    const std::vector<Index> anchors = select_anchors(n, {n, 9});
    REQUIRE(anchors.size() == static_cast<std::size_t>(n));
    Matrix xa(n, 3);
    for (Index i = 0; i < n; ++i) xa.row(i) = x.row(anchors[static_cast<std::size_t>(i)]);
    const RidgeModel ny = fit_krr_nystrom(gram(kern, xa), gram(kern, x, xa), 1e-3, anchors);
    const RidgeModel exact = fit_krr(gram(kern, x), 1e-3);
    const Matrix a_ny = ny.coefficients(Matrix(gram(kern, xa, xt).entries));
    const Matrix a_ex = exact.coefficients(Matrix(gram(kern, x, xt).entries));
    CHECK(max_abs_diff(a_ny, a_ex) <= 1e-6);
  }

  TEST_CASE("nystrom with one anchor is rank one") {
    const Index n = 12;
    const Matrix x = random_matrix(n, 2, 5);
    const KernelSpec kern = KernelSpec::gaussian(1.0);
    const std::vector<Index> anchors = select_anchors(n, {1, 3});
    REQUIRE(anchors.size() == 1);
    const Matrix xa = x.row(anchors[0]);
    const GramMatrix k_nm = gram(kern, x, xa);
    const RidgeModel ny = fit_krr_nystrom(gram(kern, xa), k_nm, 0.01, anchors);
    const Matrix xt = random_matrix(4, 2, 6);
    const Matrix alpha = ny.coefficients(Matrix(gram(kern, xa, xt).entries));
    for (Index j = 0; j < alpha.cols(); ++j) {
      // alpha(x) is a multiple of k(., anchor) over the training rows.
      const Vector col = alpha.col(j);
      const Vector dir = k_nm.entries.col(0);
      CHECK((col - dir * (dir.dot(col) / dir.squaredNorm())).norm() <= 1e-12 * (1.0 + col.norm()));
    }
  }

  TEST_CASE("nystrom test error is close to exact KRR") {
    const Index n = 200;
    Matrix x = random_matrix(n, 2, 8);
    Matrix xt = random_matrix(300, 2, 9);
    const auto target = [](const Matrix& p) {
      Matrix y(p.rows(), 1);
      for (Index i = 0; i < p.rows(); ++i) y(i, 0) = std::sin(p(i, 0)) + 0.5 * std::cos(2.0 * p(i, 1));
      return y;
    };
    const Matrix y = target(x) + 0.1 * random_matrix(n, 1, 10);
    const Matrix yt = target(xt);
    const KernelSpec kern = KernelSpec::gaussian(1.0);
    const double lambda = 1e-3;
    const RidgeModel exact = fit_krr(gram(kern, x), lambda);
    const double mse_exact =
        (exact.coefficients(Matrix(gram(kern, x, xt).entries)).transpose() * y - yt).squaredNorm() / 300.0;
    const std::vector<Index> anchors = select_anchors(n, {50, 11});
    Matrix xa(50, 2);
    for (Index i = 0; i < 50; ++i) xa.row(i) = x.row(anchors[static_cast<std::size_t>(i)]);
    const RidgeModel ny = fit_krr_nystrom(gram(kern, xa), gram(kern, x, xa), lambda, anchors);
    const double mse_ny =
        (ny.coefficients(Matrix(gram(kern, xa, xt).entries)).transpose() * y - yt).squaredNorm() / 300.0;
    CHECK(mse_ny <= 2.0 * mse_exact);
  }

  TEST_CASE("select_anchors") {
    const auto a = select_anchors(100, {10, 4});
    CHECK(a.size() == 10);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    CHECK(a == select_anchors(100, {10, 4}));
    CHECK_THROWS_AS(select_anchors(5, {6, 1}), Error);
  }

  TEST_CASE("theory lambdas") {
    CHECK(theory_lambda2(0.0, 100) == doctest::Approx(0.01));
    CHECK(theory_lambda2(1.0, 100) == doctest::Approx(0.1));
    CHECK(theory_lambda2(4.0, 4) == doctest::Approx(1.0));
    CHECK(theory_lambda1(0.37, 1.0, 16) == doctest::Approx(0.25));
    CHECK(theory_lambda1(0.25, 0.0, 4) == doctest::Approx(1.0));
    CHECK(theory_lambda1(1.0, 0.3, 100) == doctest::Approx(0.1));
    CHECK_THROWS_AS(theory_lambda1(0.0, 0.5, 10), Error);
  }
}

#include "rriokr/regression.hpp"
#include "rriokr/spectral.hpp"
#include "rriokr/subspace.hpp"
#include "support.hpp"

using namespace rriokr;
using testing::max_abs_diff;
using testing::random_matrix;

namespace {

struct LinearCase {
  Matrix x, y;
  GramMatrix k_x, k_z;
  RidgeModel model;
};

LinearCase linear_case(Index n, Index dx, Index dy, double lambda, std::uint64_t seed) {
  LinearCase c;
  c.x = random_matrix(n, dx, seed);
  c.y = c.x * random_matrix(dx, dy, seed + 1) + 0.3 * random_matrix(n, dy, seed + 2);
  c.k_x = gram(KernelSpec::linear(), c.x);
  c.k_z = gram(KernelSpec::linear(), c.y);
  c.model = fit_krr(c.k_x, lambda);
  return c;
}

// Explicit basis vectors e_l = sum_i output_map(i, l) y_i as columns.
Matrix explicit_basis(const SubspaceProjection& p, const Matrix& y) { return y.transpose() * p.output_map; }

}  // namespace

TEST_SUITE("subspace") {
  TEST_CASE("supervised projection matches the explicit feature-space oracle") {
    const Index n = 20, d = 6, p = 3;
    const double lambda = 0.05;
    const LinearCase c = linear_case(n, 4, d, lambda, 3);
    const SubspaceProjection proj = fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, p);
    REQUIRE(proj.rank() == p);

    const Matrix fitted = c.x * testing::explicit_ridge(c.x, c.y, lambda);  // rows h(x_i)
    const Matrix cov = fitted.transpose() * fitted / static_cast<double>(n);
    const Matrix top = testing::top_eigenvectors(cov, p);

    // UY rows are the coordinates of y_i; the sign of each basis vector is
    // free, so compare inner products of projected outputs.
    const Matrix uy = proj.projected_train_outputs;
    const Matrix oracle_coords = c.y * top;
    CHECK(max_abs_diff(uy * uy.transpose(), oracle_coords * oracle_coords.transpose()) <= 1e-8);

    const Matrix basis = explicit_basis(proj, c.y);
    CHECK(max_abs_diff(basis.transpose() * basis, Matrix::Identity(p, p)) <= 1e-8);
    CHECK(max_abs_diff(basis * basis.transpose(), top * top.transpose()) <= 1e-8);

    // Kept eigenvalues are the squared singular values of [h(x_i)] / sqrt(n).
    const Vector ev = testing::eigenvalues_desc(cov);
    for (Index l = 0; l < p; ++l) CHECK(proj.kept_eigenvalues(l) == doctest::Approx(ev(l)).epsilon(1e-8));
  }

  TEST_CASE("supervised basis is orthonormal against K_h") {
    const LinearCase c = linear_case(30, 5, 7, 0.01, 8);
    const SubspaceProjection proj = fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, 4);
    const Matrix a = c.model.coefficients(c.k_x.entries);
    const Matrix k_h = a.transpose() * c.k_z.entries * a;
    CHECK(max_abs_diff(proj.beta.transpose() * k_h * proj.beta, Matrix::Identity(4, 4)) <= 1e-6);
    for (Index l = 1; l < proj.rank(); ++l) CHECK(proj.kept_eigenvalues(l) <= proj.kept_eigenvalues(l - 1));
    CHECK((proj.kept_eigenvalues.array() > 0.0).all());
  }

  TEST_CASE("zero outputs give an empty projection") {
    const Matrix x = random_matrix(10, 3, 1);
    const GramMatrix k_x = gram(KernelSpec::linear(), x);
    const RidgeModel m = fit_krr(k_x, 0.1);
    const SubspaceProjection proj = fit_supervised_projection(m, k_x.entries, Matrix::Zero(10, 10), 3);
    CHECK(proj.rank() == 0);
    CHECK(proj.projected_train_outputs.cols() == 0);
  }

  TEST_CASE("rank is clamped to the effective rank") {
    const LinearCase c = linear_case(25, 3, 8, 0.01, 4);
    // h(x) lives in a 3-dimensional image under a linear input kernel.
    const SubspaceProjection proj = fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, 10);
    CHECK(proj.requested_rank == 10);
    CHECK(proj.rank() == 3);
    CHECK_THROWS_AS(fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, -1), Error);
  }

  TEST_CASE("unsupervised projection examples") {
    const Matrix ortho = haar_orthogonal(5, 2);
    const Matrix kz = gram(KernelSpec::linear(), ortho).entries;
    const SubspaceProjection full = fit_unsupervised_projection(kz, 5);
    CHECK(std::abs(reconstruction_residual(full, kz)) <= 1e-12);

    Matrix collinear = random_matrix(12, 1, 3) * random_matrix(1, 4, 4);
    const Matrix kc = gram(KernelSpec::linear(), collinear).entries;
    const SubspaceProjection one = fit_unsupervised_projection(kc, 1);
    CHECK(std::abs(reconstruction_residual(one, kc)) <= 1e-10 * kc.diagonal().mean());
  }

  TEST_CASE("unsupervised residual follows Eckart-Young") {
    const Index n = 30, d = 5;
    const Matrix y = random_matrix(n, d, 6) * random_matrix(d, d, 7);
    const Matrix kz = gram(KernelSpec::linear(), y).entries;
    const Vector ev = testing::eigenvalues_desc(y.transpose() * y / static_cast<double>(n));
    double prev = std::numeric_limits<double>::infinity();
    for (Index p = 0; p <= d; ++p) {
      const SubspaceProjection proj = fit_unsupervised_projection(kz, p);
      const double res = reconstruction_residual(proj, kz);
      CHECK(res == doctest::Approx(ev.tail(d - p).sum()).epsilon(1e-8).scale(ev(0)));
      CHECK(res <= prev + 1e-12);
      prev = res;
      const Matrix basis = explicit_basis(proj, y);
      CHECK(max_abs_diff(basis.transpose() * basis, Matrix::Identity(p, p)) <= 1e-8);
    }
    CHECK(fit_unsupervised_projection(kz, 0).rank() == 0);
    CHECK(reconstruction_residual(fit_unsupervised_projection(kz, 0), kz) ==
          doctest::Approx(y.rowwise().squaredNorm().mean()));
  }

  TEST_CASE("supervised residual is nonincreasing in p") {
    const LinearCase c = linear_case(40, 6, 6, 0.02, 11);
    const SubspaceProjection full = fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, 6);
    double prev = std::numeric_limits<double>::infinity();
    for (Index p = 0; p <= 6; ++p) {
      const double res = reconstruction_residual(full.truncated(p), c.k_z.entries);
      CHECK(res <= prev + 1e-10);
      prev = res;
    }
  }

  TEST_CASE("projecting twice changes nothing") {
    const LinearCase c = linear_case(25, 4, 6, 0.05, 12);
    for (const SubspaceProjection& proj :
         {fit_supervised_projection(c.model, c.k_x.entries, c.k_z.entries, 3),
          fit_unsupervised_projection(c.k_z.entries, 3)}) {
      const Matrix z = random_matrix(9, 6, 13);
      const Matrix coords = projected_coordinates(proj, c.y * z.transpose());
      const Matrix basis = explicit_basis(proj, c.y);
      const Matrix pz = coords * basis.transpose();  // P z, explicit
      const Matrix again = projected_coordinates(proj, c.y * pz.transpose());
      CHECK(max_abs_diff(again, coords) <= 1e-10);
    }
  }

  TEST_CASE("oracle projection examples") {
    Matrix m = Vector::Map(std::vector<double>{3, 2, 1}.data(), 3).asDiagonal();
    const OracleProjection two = fit_oracle_projection(m, 2);
    Matrix span = Matrix::Zero(3, 3);
    span(0, 0) = span(1, 1) = 1.0;
    CHECK(max_abs_diff(two.basis * two.basis.transpose(), span) <= 1e-14);
    const OracleProjection all = fit_oracle_projection(m, 3);
    CHECK(max_abs_diff(all.basis * all.basis.transpose(), Matrix::Identity(3, 3)) <= 1e-12);
    CHECK_THROWS_AS(fit_oracle_projection(m, 4), Error);

    const Matrix q = haar_orthogonal(6, 4);
    Vector spec(6);
    spec << 5, 2, 1, 0.5, 0.2, 0.1;
    const Matrix rotated = q * spec.asDiagonal() * q.transpose();
    const OracleProjection top = fit_oracle_projection(rotated, 1);
    CHECK(std::abs(top.basis.col(0).dot(q.col(0))) > 1.0 - 1e-8);

    const Matrix rows = random_matrix(10, 3, 3);
    CHECK(reconstruction_residual(all, rows) == doctest::Approx(0.0).scale(1.0));
    CHECK(reconstruction_residual(two, rows) == doctest::Approx(rows.col(2).squaredNorm() / 10.0));
  }

  TEST_CASE("supervised projection from a ridge path matches the direct fit") {
    // Thin path (linear kernel, d < n) and full path (Gaussian kernel).
    const Matrix x = random_matrix(35, 4, 61);
    const Matrix y = x * random_matrix(4, 5, 62) + 0.3 * random_matrix(35, 5, 63);
    for (const KernelSpec& kx : {KernelSpec::linear(), KernelSpec::gaussian(2.0)}) {
      const GramMatrix k_x = gram(kx, x);
      const Matrix k_z = gram(KernelSpec::linear(), y).entries;
      const RidgePath path(k_x, x);
      const double lambda = 0.02;
      for (Index p : {1, 3, 5}) {
        const SubspaceProjection direct = fit_supervised_projection(fit_krr(k_x, lambda), k_x.entries, k_z, p);
        const SubspaceProjection via = fit_supervised_projection(path, lambda, k_z * path.basis(), p);
        REQUIRE(via.rank() == direct.rank());
        CHECK(max_abs_diff(via.kept_eigenvalues, direct.kept_eigenvalues) <= 1e-10);
        // Column signs are free; compare sign-invariant products.
        const auto outer = [](const Matrix& a, const Matrix& b) { return Matrix(a * b.transpose()); };
        CHECK(max_abs_diff(outer(via.projected_train_outputs, via.output_map),
                           outer(direct.projected_train_outputs, direct.output_map)) <= 1e-8);
        CHECK(max_abs_diff(outer(via.beta, via.beta), outer(direct.beta, direct.beta)) <= 1e-8);
      }
    }
  }

  TEST_CASE("provenance names") {
    for (Provenance p : {Provenance::supervised, Provenance::unsupervised, Provenance::oracle})
      CHECK(parse_provenance(to_string(p)) == p);
    CHECK_THROWS_AS(parse_provenance("semi"), Error);
  }
}

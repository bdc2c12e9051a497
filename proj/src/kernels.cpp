#include "rriokr/kernels.hpp"

#include "parallel.hpp"

#include <charconv>
#include <cmath>
#include <vector>

namespace rriokr {

namespace {

// Fixed left-to-right order: dot(a, b) == dot(b, a) bit for bit.
double dot(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

void check_binary(const double* a, Index d) {
  for (Index k = 0; k < d; ++k) {
    if (a[k] != 0.0 && a[k] != 1.0)
      fail(ErrorKind::data, "gaussian_tanimoto kernel requires binary (0/1) vectors");
  }
}

double from_parts(const KernelSpec& spec, double ab, double aa, double bb) {
  switch (spec.family()) {
    case KernelFamily::linear:
      return ab;
    case KernelFamily::gaussian: {
      const double d2 = std::max(0.0, aa + bb - 2.0 * ab);
      return std::exp(-d2 / (2.0 * spec.sigma2()));
    }
    case KernelFamily::gaussian_tanimoto: {
      const double denom = aa + bb - ab;
      const double t = denom == 0.0 ? 1.0 : ab / denom;
      return std::exp(-(1.0 - t) / spec.sigma2());
    }
  }
  return 0.0;
}

double parse_width(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    fail(ErrorKind::usage, "invalid kernel width '" + std::string(text) + "'");
  return value;
}

// Points as contiguous columns plus their squared norms.
struct PointTable {
  Matrix cols;
  Vector norms;

  PointTable(const KernelSpec& spec, const Matrix& points)
      : cols(points.transpose()), norms(points.rows()) {
    const Index d = cols.rows();
    for (Index i = 0; i < cols.cols(); ++i) {
      const double* p = cols.col(i).data();
      if (spec.family() == KernelFamily::gaussian_tanimoto) check_binary(p, d);
      norms(i) = dot(p, p, d);
    }
  }

  const double* point(Index i) const { return cols.col(i).data(); }
  Index dim() const { return cols.rows(); }
};

}  // namespace

KernelSpec KernelSpec::gaussian(double sigma2) {
  require(sigma2 > 0.0 && std::isfinite(sigma2), ErrorKind::usage,
          "gaussian kernel width sigma2 must be positive");
  return KernelSpec(KernelFamily::gaussian, sigma2);
}

KernelSpec KernelSpec::linear() { return KernelSpec(KernelFamily::linear, 0.0); }

KernelSpec KernelSpec::gaussian_tanimoto(double sigma2) {
  require(sigma2 > 0.0 && std::isfinite(sigma2), ErrorKind::usage,
          "gaussian_tanimoto kernel width sigma2 must be positive");
  return KernelSpec(KernelFamily::gaussian_tanimoto, sigma2);
}

KernelSpec KernelSpec::parse(std::string_view text) {
  if (text == "linear") return linear();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    fail(ErrorKind::usage, "unknown kernel '" + std::string(text) + "'");
  const auto family = text.substr(0, colon);
  const double width = parse_width(text.substr(colon + 1));
  if (family == "gaussian") return gaussian(width);
  if (family == "tanimoto" || family == "gaussian_tanimoto")
    return gaussian_tanimoto(width);
  fail(ErrorKind::usage, "unknown kernel family '" + std::string(family) + "'");
}

std::string KernelSpec::to_string() const {
  if (family_ == KernelFamily::linear) return "linear";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), sigma2_);
  const std::string width(buf, res.ptr);
  return (family_ == KernelFamily::gaussian ? "gaussian:" : "tanimoto:") + width;
}

double eval_kernel(const KernelSpec& spec, std::span<const double> a,
                   std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::data, "kernel arguments differ in dimension");
  const auto d = static_cast<Index>(a.size());
  if (spec.family() == KernelFamily::gaussian_tanimoto) {
    check_binary(a.data(), d);
    check_binary(b.data(), d);
  }
  return from_parts(spec, dot(a.data(), b.data(), d), dot(a.data(), a.data(), d),
                    dot(b.data(), b.data(), d));
}

GramMatrix gram(const KernelSpec& spec, const Matrix& points) {
  require(points.rows() > 0, ErrorKind::data, "gram: empty point set");
  const PointTable table(spec, points);
  const Index n = points.rows();
  const Index d = table.dim();
  GramMatrix out{Matrix(n, n), spec, true};
  detail::parallel_for(n, [&](Index i) {
    for (Index j = i; j < n; ++j) {
      out.entries(i, j) = from_parts(spec, dot(table.point(i), table.point(j), d),
                                     table.norms(i), table.norms(j));
    }
  });
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) out.entries(i, j) = out.entries(j, i);
  return out;
}

GramMatrix gram(const KernelSpec& spec, const Matrix& rows, const Matrix& cols) {
  require(rows.rows() > 0 && cols.rows() > 0, ErrorKind::data, "gram: empty point set");
  require(rows.cols() == cols.cols(), ErrorKind::data, "gram: point dimensions differ");
  const PointTable left(spec, rows);
  const PointTable right(spec, cols);
  const Index d = left.dim();
  GramMatrix out{Matrix(rows.rows(), cols.rows()), spec, false};
  detail::parallel_for(cols.rows(), [&](Index j) {
    for (Index i = 0; i < rows.rows(); ++i) {
      out.entries(i, j) = from_parts(spec, dot(left.point(i), right.point(j), d),
                                     left.norms(i), right.norms(j));
    }
  });
  return out;
}

Vector self_kernel(const KernelSpec& spec, const Matrix& points) {
  const PointTable table(spec, points);
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i)
    out(i) = from_parts(spec, table.norms(i), table.norms(i), table.norms(i));
  return out;
}

}  // namespace rriokr

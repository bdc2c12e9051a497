#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rriokr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative eigenvalue floor applied wherever a pseudo-inverse, a fractional
// power or an inverse square root of a spectrum is taken.
inline constexpr double kRelativeCutoff = 1e-12;

// Error categories double as process exit codes for the command-line tool.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  numeric = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const char* what) {
  if (!ok) fail(kind, what);
}

// Worker count used by Gram construction and the BLAS backend. Results are
// independent of this value for every operation in the library except
// wall-clock timings.
void set_thread_count(int threads);
int thread_count();

}  // namespace rriokr

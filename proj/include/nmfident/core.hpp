#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmfident {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonFinite,
  ZeroColumn,
  ZeroMatrix,
  NegativeInput,
  RankDeficient,
  DegenerateSpan,
  NotSymmetric,
  SingularIterate,
  LpFailure,
  Infeasible,
  MaxIterations,
  TooLarge,
  DegenerateTheta,
  DegenerateEmission,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for errors caused by malformed input rather than numerics.
  bool is_input_error() const noexcept;

 private:
  ErrorKind kind_;
};

/// Throws NonFinite unless every entry of `m` is finite.
void require_finite(const Mat& m, const char* what);

/// Result of any bi-factorization X ~ W H^T.
struct FactorPair {
  Mat W;  // M x R
  Mat H;  // N x R
  bool nonneg_w = false;
  bool nonneg_h = false;

  Index rank() const noexcept { return W.cols(); }

  /// Throws ShapeMismatch when W and H disagree on the rank, and checks the
  /// advertised nonnegativity flags at tolerance -1e-12.
  void validate() const;
};

/// Iterate-by-iterate objective values recorded by the iterative solvers.
using Trace = std::vector<double>;

/// Optional sink for warnings (defaults to stderr). Pass nullptr to silence.
using WarningSink = void (*)(const std::string&);
void set_warning_sink(WarningSink sink) noexcept;
void warn(const std::string& message);

}  // namespace nmfident

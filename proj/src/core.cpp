#include "nmfident/core.hpp"
#include "nmfident/random.hpp"

#include <iostream>
#include <numeric>

namespace nmfident {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ZeroColumn: return "ZeroColumn";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::NegativeInput: return "NegativeInput";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DegenerateSpan: return "DegenerateSpan";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::SingularIterate: return "SingularIterate";
    case ErrorKind::LpFailure: return "LpFailure";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegenerateTheta: return "DegenerateTheta";
    case ErrorKind::DegenerateEmission: return "DegenerateEmission";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool Error::is_input_error() const noexcept {
  switch (kind_) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::NonFinite:
    case ErrorKind::ZeroColumn:
    case ErrorKind::ZeroMatrix:
    case ErrorKind::NegativeInput:
    case ErrorKind::NotSymmetric:
    case ErrorKind::TooLarge:
    case ErrorKind::DegenerateEmission:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has NaN/Inf entries");
}

void FactorPair::validate() const {
  if (W.cols() != H.cols())
    throw Error(ErrorKind::ShapeMismatch, "W and H must have the same number of columns");
  if (W.cols() > std::min(W.rows(), H.rows()))
    throw Error(ErrorKind::ShapeMismatch, "rank exceeds min(M, N)");
  constexpr double tol = -1e-12;
  if (nonneg_w && W.size() > 0 && W.minCoeff() < tol)
    throw Error(ErrorKind::NegativeInput, "W flagged nonnegative has negative entries");
  if (nonneg_h && H.size() > 0 && H.minCoeff() < tol)
    throw Error(ErrorKind::NegativeInput, "H flagged nonnegative has negative entries");
}

namespace {
void default_sink(const std::string& message) { std::cerr << "warning: " << message << '\n'; }
WarningSink g_sink = &default_sink;
}  // namespace

void set_warning_sink(WarningSink sink) noexcept { g_sink = sink; }

void warn(const std::string& message) {
  if (g_sink) g_sink(message);
}

// ---------------------------------------------------------------- random

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

IndexList sample_without_replacement(CounterRng& rng, Index n, Index k) {
  if (k < 0 || k > n) throw Error(ErrorKind::InvalidArgument, "sample size out of range");
  IndexList pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

Mat uniform_matrix(CounterRng& rng, Index rows, Index cols, double lo, double hi) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

Mat gaussian_matrix(CounterRng& rng, Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Mat exponential_matrix(CounterRng& rng, Index rows, Index cols) {
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.exponential();
  return m;
}

void sparsify_exact(CounterRng& rng, Mat& m, double density) {
  if (!(density > 0.0 && density <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "density must lie in (0, 1]");
  const Index total = m.size();
  const auto keep = static_cast<Index>(std::llround(density * static_cast<double>(total)));
  const auto zeroed = sample_without_replacement(rng, total, total - keep);
  for (Index idx : zeroed) m.data()[idx] = 0.0;
}

Vec uniform_simplex(CounterRng& rng, Index dim) {
  Vec v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = rng.exponential();
  return v / v.sum();
}

}  // namespace nmfident

#include "nmfident/matcore.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace nmfident {

Normalized l1_normalize_columns(const Mat& X) {
  require_finite(X, "X");
  Normalized out;
  out.Xbar = X;
  out.record.scales.resize(X.cols());
  out.record.input_nonnegative = X.size() == 0 || X.minCoeff() >= 0.0;
  if (!out.record.input_nonnegative)
    warn("l1 column normalization of a matrix with negative entries does not enforce row-stochasticity");
  for (Index l = 0; l < X.cols(); ++l) {
    const double s = X.col(l).lpNorm<1>();
    if (!(s > 0.0)) {
      std::ostringstream os;
      os << "column " << l << " has zero l1 norm";
      throw Error(ErrorKind::ZeroColumn, os.str());
    }
    out.record.scales(l) = s;
    out.Xbar.col(l) /= s;
  }
  return out;
}

IndexList nonzero_columns(const Mat& X) {
  IndexList keep;
  for (Index l = 0; l < X.cols(); ++l)
    if (X.col(l).lpNorm<1>() > 0.0) keep.push_back(l);
  return keep;
}

Mat select_columns(const Mat& X, const IndexList& cols) {
  Mat out(X.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = X.col(cols[k]);
  return out;
}

Mat denormalize_columns(const Mat& Xbar, const NormalizationRecord& rec) {
  if (Xbar.cols() != rec.scales.size())
    throw Error(ErrorKind::ShapeMismatch, "normalization record does not match matrix");
  return Xbar * rec.scales.asDiagonal();
}

namespace {

Mat unit_columns(const Mat& H) {
  Mat out = H;
  for (Index r = 0; r < H.cols(); ++r) {
    const double n = H.col(r).norm();
    if (n > 0.0) out.col(r) /= n;
  }
  return out;
}

double assignment_cost(const Mat& cost, const IndexList& perm) {
  double s = 0.0;
  for (std::size_t r = 0; r < perm.size(); ++r) s += cost(static_cast<Index>(r), perm[r]);
  return s;
}

}  // namespace

IndexList exhaustive_assignment(const Mat& cost) {
  const Index n = cost.rows();
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  IndexList best = perm;
  double best_cost = assignment_cost(cost, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = assignment_cost(cost, perm);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  }
  return best;
}

IndexList hungarian(const Mat& cost) {
  // Shortest augmenting path formulation with potentials (1-based internally).
  const Index n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorKind::ShapeMismatch, "assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  IndexList assignment(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assignment;
}

MatchResult match_and_mse(const Mat& H_true, const Mat& H_est) {
  if (H_true.rows() != H_est.rows() || H_true.cols() != H_est.cols())
    throw Error(ErrorKind::ShapeMismatch, "match_and_mse needs equally shaped factors");
  const Index R = H_true.cols();
  MatchResult out;
  if (R == 0) return out;
  const Mat A = unit_columns(H_true);
  const Mat B = unit_columns(H_est);
  Mat cost(R, R);
  for (Index r = 0; r < R; ++r)
    for (Index k = 0; k < R; ++k) cost(r, k) = (A.col(r) - B.col(k)).squaredNorm();
  out.perm = R <= 8 ? exhaustive_assignment(cost) : hungarian(cost);
  out.mse = assignment_cost(cost, out.perm) / static_cast<double>(R);
  return out;
}

double default_logdet_eps(const Mat& W) {
  const double t = W.squaredNorm();  // trace(W^T W)
  const double eps = 1e-8 * t / static_cast<double>(std::max<Index>(W.cols(), 1));
  return eps > 0.0 ? eps : 1e-8;
}

LogDetValue logdet_reg(const Mat& W, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "logdet_reg needs eps > 0");
  Mat S = W.transpose() * W;
  S.diagonal().array() += eps;
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NonFinite, "W^T W + eps I not positive definite");
  LogDetValue out;
  const Mat L = llt.matrixL();
  out.value = 2.0 * L.diagonal().array().log().sum();
  out.grad = 2.0 * llt.solve(W.transpose()).transpose();
  return out;
}

double residual_rel(const Mat& X, const FactorPair& pair) {
  if (pair.W.rows() != X.rows() || pair.H.rows() != X.cols() || pair.W.cols() != pair.H.cols())
    throw Error(ErrorKind::ShapeMismatch, "factor shapes do not match X");
  const double nx = X.norm();
  if (!(nx > 0.0)) throw Error(ErrorKind::ZeroMatrix, "||X||_F = 0");
  return (X - pair.W * pair.H.transpose()).norm() / nx;
}

double tv_distance_matched(const Mat& A, const Mat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw Error(ErrorKind::ShapeMismatch, "tv_distance_matched needs equal shapes");
  const Index R = A.cols();
  Mat cost(R, R);
  for (Index r = 0; r < R; ++r)
    for (Index k = 0; k < R; ++k) cost(r, k) = (A.col(r) - B.col(k)).lpNorm<1>();
  const auto perm = R <= 8 ? exhaustive_assignment(cost) : hungarian(cost);
  return assignment_cost(cost, perm) / (2.0 * static_cast<double>(R));
}

}  // namespace nmfident

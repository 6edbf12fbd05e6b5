#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's solvers.

#include "nmfident/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace oracle {

using nmfident::Index;
using nmfident::Mat;
using nmfident::Vec;

/// Calls fn for every k-subset of {0..n-1}.
inline void for_each_subset(Index n, Index k, const std::function<void(const std::vector<Index>&)>& fn) {
  if (k > n || k < 0) return;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  while (true) {
    fn(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

/// max c^T x s.t. Ex = f, Gx >= h over a bounded polytope, by enumerating
/// all vertices. Returns nullopt when no vertex is feasible.
inline std::optional<double> lp_vertex_max(const Vec& c, const Mat& E, const Vec& f, const Mat& G, const Vec& h,
                                           double feas_tol = 1e-9) {
  const Index n = c.size();
  const Index me = E.rows();
  std::optional<double> best;
  if (n - me < 0) return best;
  for_each_subset(G.rows(), n - me, [&](const std::vector<Index>& act) {
    Mat A(n, n);
    Vec b(n);
    if (me > 0) {
      A.topRows(me) = E;
      b.head(me) = f;
    }
    for (std::size_t k = 0; k < act.size(); ++k) {
      A.row(me + static_cast<Index>(k)) = G.row(act[k]);
      b(me + static_cast<Index>(k)) = h(act[k]);
    }
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < n) return;
    const Vec x = lu.solve(b);
    if (me > 0 && (E * x - f).cwiseAbs().maxCoeff() > feas_tol) return;
    if (G.rows() > 0 && (G * x - h).minCoeff() < -feas_tol) return;
    const double v = c.dot(x);
    if (!best || v > *best) best = v;
  });
  return best;
}

/// Exact minimizer of 1/2 x^T P x + q^T x s.t. Ex = f, Gx >= 0 for P > 0, by
/// enumerating active sets and checking KKT sign conditions.
inline std::optional<Vec> qp_active_set(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G) {
  const Index n = q.size();
  const Index me = E.rows();
  const Index mg = G.rows();
  std::optional<Vec> best;
  double best_val = std::numeric_limits<double>::infinity();
  for (Index k = 0; k <= std::min(mg, n); ++k) {
    for_each_subset(mg, k, [&](const std::vector<Index>& act) {
      const Index m = me + k;
      Mat K = Mat::Zero(n + m, n + m);
      Vec rhs = Vec::Zero(n + m);
      K.topLeftCorner(n, n) = P;
      rhs.head(n) = -q;
      for (Index i = 0; i < me; ++i) {
        K.block(0, n + i, n, 1) = E.row(i).transpose();
        K.block(n + i, 0, 1, n) = E.row(i);
        rhs(n + i) = f(i);
      }
      for (Index a = 0; a < k; ++a) {
        const auto g = G.row(act[static_cast<std::size_t>(a)]);
        K.block(0, n + me + a, n, 1) = -g.transpose();
        K.block(n + me + a, 0, 1, n) = g;
      }
      Eigen::FullPivLU<Mat> lu(K);
      if (lu.rank() < n + m) return;
      const Vec sol = lu.solve(rhs);
      const Vec x = sol.head(n);
      if (k > 0 && sol.tail(k).minCoeff() < -1e-10) return;
      if (mg > 0 && (G * x).minCoeff() < -1e-10) return;
      const double val = 0.5 * x.dot(P * x) + q.dot(x);
      if (val < best_val) {
        best_val = val;
        best = x;
      }
    });
  }
  return best;
}

/// Central finite-difference gradient of a scalar function of a matrix.
inline Mat fd_gradient(const std::function<double(const Mat&)>& fn, const Mat& X, double h = 1e-6) {
  Mat g(X.rows(), X.cols());
  Mat Y = X;
  for (Index i = 0; i < X.size(); ++i) {
    const double orig = Y.data()[i];
    const double step = h * std::max(1.0, std::abs(orig));
    Y.data()[i] = orig + step;
    const double fp = fn(Y);
    Y.data()[i] = orig - step;
    const double fm = fn(Y);
    Y.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Smallest sum_r cost(r, perm[r]) over all permutations.
inline double brute_force_assignment(const Mat& cost) {
  std::vector<Index> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t r = 0; r < perm.size(); ++r) s += cost(static_cast<Index>(r), perm[r]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Max of ||x||^2 over {Hx >= 0, 1^T x = 1} by vertex enumeration, together
/// with the maximizing vertex. Returns nullopt when the polytope is unbounded
/// in a direction that increases the norm.
struct ScatterMax {
  double value = 0.0;
  Vec argmax;
  bool bounded = true;
};

inline ScatterMax ssc_vertex_max(const Mat& H) {
  const Index R = H.cols();
  ScatterMax out;
  out.value = -1.0;
  for_each_subset(H.rows(), R - 1, [&](const std::vector<Index>& act) {
    Mat A(R, R);
    Vec b = Vec::Zero(R);
    A.row(0).setOnes();
    b(0) = 1.0;
    for (std::size_t k = 0; k < act.size(); ++k) A.row(1 + static_cast<Index>(k)) = H.row(act[k]);
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < R) return;
    const Vec x = lu.solve(b);
    if ((H * x).minCoeff() < -1e-10) return;
    if (x.squaredNorm() > out.value) {
      out.value = x.squaredNorm();
      out.argmax = x;
    }
  });
  // Recession directions: d with Hd >= 0, 1^T d = 0, d != 0. Any such d makes
  // the polytope unbounded. Check the extreme rays of that cone.
  for_each_subset(H.rows(), R - 2, [&](const std::vector<Index>& act) {
    Mat A(R - 1, R);
    A.row(0).setOnes();
    for (std::size_t k = 0; k < act.size(); ++k) A.row(1 + static_cast<Index>(k)) = H.row(act[k]);
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < R - 1) return;
    const Mat ker = lu.kernel();
    if (ker.cols() != 1) return;
    for (double s : {1.0, -1.0}) {
      const Vec d = s * ker.col(0);
      if ((H * d).minCoeff() >= -1e-10 * d.norm()) out.bounded = false;
    }
  });
  return out;
}

/// Hungarian-free small-rank MSE: l2-normalize columns, brute-force the
/// best permutation.
inline double mse_bruteforce(const Mat& A, const Mat& B) {
  const Index R = A.cols();
  Mat An = A, Bn = B;
  for (Index r = 0; r < R; ++r) {
    if (An.col(r).norm() > 0) An.col(r).normalize();
    if (Bn.col(r).norm() > 0) Bn.col(r).normalize();
  }
  Mat cost(R, R);
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < R; ++j) cost(i, j) = (An.col(i) - Bn.col(j)).squaredNorm();
  return brute_force_assignment(cost) / static_cast<double>(R);
}

}  // namespace oracle

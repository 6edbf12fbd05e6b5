#include "nmfident/convexkit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nmfident {

// ------------------------------------------------------------ projections

Vec simplex_project(const Vec& v, double radius) {
  const Index n = v.size();
  if (n == 0) return v;
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (Index k = 0; k < n; ++k) {
    cumsum += u[static_cast<std::size_t>(k)];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Vec l1_ball_project(const Vec& v, double radius) {
  if (radius <= 0.0) return Vec::Zero(v.size());
  if (v.lpNorm<1>() <= radius) return v;
  const Vec mag = simplex_project(v.cwiseAbs(), radius);
  return (v.array().sign() * mag.array()).matrix();
}

Mat prox_row_inf(const Mat& V, double lam) {
  if (lam < 0.0) throw Error(ErrorKind::InvalidArgument, "prox_row_inf needs lam >= 0");
  if (lam == 0.0) return V;
  Mat out(V.rows(), V.cols());
  for (Index i = 0; i < V.rows(); ++i) {
    const Vec row = V.row(i).transpose();
    out.row(i) = (row - l1_ball_project(row, lam)).transpose();
  }
  return out;
}

// ------------------------------------------------------------------- NNLS

namespace {

double nnls_kkt(const Mat& X, const Mat& grad) {
  double worst = 0.0;
  for (Index i = 0; i < X.size(); ++i) worst = std::max(worst, std::abs(std::min(X.data()[i], grad.data()[i])));
  return worst;
}

}  // namespace

NnlsResult nnls_solve(const Mat& A, const Mat& B, int max_iters, double tol) {
  if (A.rows() != B.rows()) throw Error(ErrorKind::ShapeMismatch, "nnls: A and B row counts differ");
  require_finite(A, "nnls A");
  require_finite(B, "nnls B");
  const Index R = A.cols();
  const Mat AtA = A.transpose() * A;
  const Mat AtB = A.transpose() * B;
  NnlsResult out;
  out.X = Mat::Zero(R, B.cols());
  if (R == 0 || B.cols() == 0) {
    out.converged = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(AtA, Eigen::EigenvaluesOnly);
  const double Lip = eig.eigenvalues().maxCoeff();
  if (!(Lip > 0.0)) {
    out.converged = true;
    return out;
  }
  // Scale for the KKT test so it is invariant to the magnitude of A and B.
  const double scale = std::max(1.0, AtB.cwiseAbs().maxCoeff());

  Mat X = out.X, Y = X, Xprev = X;
  double t = 1.0;
  double f_prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    const Mat gradY = AtA * Y - AtB;
    Xprev = X;
    X = (Y - gradY / Lip).cwiseMax(0.0);
    const double f = (X.transpose() * AtA * X).trace() - 2.0 * (X.cwiseProduct(AtB)).sum();
    if (f > f_prev) {  // adaptive restart
      t = 1.0;
      Y = X;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      Y = X + ((t - 1.0) / t_next) * (X - Xprev);
      t = t_next;
    }
    f_prev = f;
    out.iterations = it;
    if (it % 10 == 0 || it == max_iters) {
      out.kkt = nnls_kkt(X, AtA * X - AtB) / scale;
      if (out.kkt <= tol) {
        out.converged = true;
        break;
      }
    }
  }

  // Support-restricted least squares polish, per column.
  for (Index j = 0; j < B.cols(); ++j) {
    std::vector<Index> support;
    for (Index r = 0; r < R; ++r)
      if (X(r, j) > 0.0) support.push_back(r);
    if (support.empty()) continue;
    const auto k = static_cast<Index>(support.size());
    Mat As(k, k);
    Vec bs(k);
    for (Index a = 0; a < k; ++a) {
      bs(a) = AtB(support[static_cast<std::size_t>(a)], j);
      for (Index b = 0; b < k; ++b)
        As(a, b) = AtA(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    }
    Eigen::LDLT<Mat> ldlt(As);
    if (ldlt.info() != Eigen::Success) continue;
    const Vec sol = ldlt.solve(bs);
    if (!sol.allFinite()) continue;
    Vec cand = Vec::Zero(R);
    for (Index a = 0; a < k; ++a) cand(support[static_cast<std::size_t>(a)]) = std::max(sol(a), 0.0);
    const Vec cur = X.col(j);
    const double f_cur = (B.col(j) - A * cur).squaredNorm();
    const double f_new = (B.col(j) - A * cand).squaredNorm();
    if (f_new <= f_cur) X.col(j) = cand;
  }
  out.kkt = nnls_kkt(X, AtA * X - AtB) / scale;
  out.converged = out.converged || out.kkt <= tol;
  out.X = std::move(X);
  return out;
}

Mat nnls(const Mat& A, const Mat& B) {
  auto res = nnls_solve(A, B);
  if (!res.converged && res.kkt > 1e-8) warn("nnls reached its iteration cap; returning best iterate");
  return std::move(res.X);
}

// --------------------------------------------------------------------- LP

const char* to_string(LpStatus s) noexcept {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr int kDegenerateRun = 30;

// Standard form: minimize d^T y, A y = b, y >= 0, b >= 0.
// Tableau rows 0..m-1 hold [B^{-1}A | B^{-1}b]; row m holds reduced costs and
// minus the objective value.
struct Tableau {
  RowMat T;
  std::vector<Index> basis;
  std::vector<char> allowed;
  Index m = 0;
  Index n = 0;
  int pivots = 0;

  void pivot(Index r, Index j) {
    T.row(r) /= T(r, j);
    for (Index i = 0; i <= m; ++i) {
      if (i == r) continue;
      const double a = T(i, j);
      if (a != 0.0) T.row(i) -= a * T.row(r);
    }
    basis[static_cast<std::size_t>(r)] = j;
    ++pivots;
  }

  void set_costs(const Vec& d) {
    T.row(m).setZero();
    T.row(m).head(n) = d.transpose();
    for (Index i = 0; i < m; ++i) {
      const double cb = d(basis[static_cast<std::size_t>(i)]);
      if (cb != 0.0) T.row(m) -= cb * T.row(i);
    }
  }

  enum class Outcome { Optimal, Unbounded };

  // Returns the entering column through `unbounded_col` when unbounded.
  Outcome run(int max_pivots, Index& unbounded_col) {
    int degenerate = 0;
    bool bland = false;
    while (true) {
      if (pivots > max_pivots) throw Error(ErrorKind::LpFailure, "simplex pivot budget exhausted");
      Index enter = -1;
      double best = -kCostTol;
      for (Index j = 0; j < n; ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) continue;
        const double rc = T(m, j);
        if (rc < best || (bland && rc < -kCostTol && enter < 0)) {
          enter = j;
          best = rc;
          if (bland) break;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      Index leave = -1;
      double min_ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        const double a = T(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = T(i, n) / a;
        if (leave < 0 || ratio < min_ratio - 1e-12) {
          leave = i;
          min_ratio = ratio;
        } else if (ratio <= min_ratio + 1e-12) {
          const bool better = bland ? basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]
                                    : a > T(leave, enter);
          if (better) {
            leave = i;
            min_ratio = std::min(min_ratio, ratio);
          }
        }
      }
      if (leave < 0) {
        unbounded_col = enter;
        return Outcome::Unbounded;
      }
      if (min_ratio <= 1e-12) {
        if (++degenerate >= kDegenerateRun) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      pivot(leave, enter);
      // Guard against drift below zero in the right-hand side.
      for (Index i = 0; i < m; ++i)
        if (T(i, n) < 0.0 && T(i, n) > -1e-11) T(i, n) = 0.0;
    }
  }
};

}  // namespace

LpResult lp_solve(const LpProblem& p) {
  const Index nx = p.c.size();
  const Index me = p.E.rows();
  const Index mi = p.G.rows();
  if ((me > 0 && p.E.cols() != nx) || p.f.size() != me || (mi > 0 && p.G.cols() != nx) || p.h.size() != mi)
    throw Error(ErrorKind::ShapeMismatch, "lp_solve: inconsistent problem dimensions");
  if (!p.c.allFinite() || !p.E.allFinite() || !p.f.allFinite() || !p.G.allFinite() || !p.h.allFinite())
    throw Error(ErrorKind::NonFinite, "lp_solve: non-finite data");

  // Columns: x+ (nx), x- (nx), slacks (mi), artificials (as needed).
  const Index m = me + mi;
  std::vector<Index> art_row;
  Mat A = Mat::Zero(m, 2 * nx + mi);
  Vec b(m);
  std::vector<Index> basis(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < me; ++i) {
    const double sgn = p.f(i) < 0.0 ? -1.0 : 1.0;
    A.row(i).head(nx) = sgn * p.E.row(i);
    A.row(i).segment(nx, nx) = -sgn * p.E.row(i);
    b(i) = sgn * p.f(i);
    art_row.push_back(i);
  }
  for (Index k = 0; k < mi; ++k) {
    const Index i = me + k;
    // G x - s = h. When h <= 0 negate so the slack is a feasible basic column.
    if (p.h(k) <= 0.0) {
      A.row(i).head(nx) = -p.G.row(k);
      A.row(i).segment(nx, nx) = p.G.row(k);
      A(i, 2 * nx + k) = 1.0;
      b(i) = -p.h(k);
      basis[static_cast<std::size_t>(i)] = 2 * nx + k;
    } else {
      A.row(i).head(nx) = p.G.row(k);
      A.row(i).segment(nx, nx) = -p.G.row(k);
      A(i, 2 * nx + k) = -1.0;
      b(i) = p.h(k);
      art_row.push_back(i);
    }
  }
  const Index n_struct = 2 * nx + mi;
  const auto n_art = static_cast<Index>(art_row.size());
  const Index n = n_struct + n_art;

  Tableau tab;
  tab.m = m;
  tab.n = n;
  tab.T = RowMat::Zero(m + 1, n + 1);
  tab.T.topLeftCorner(m, n_struct) = A;
  tab.T.col(n).head(m) = b;
  for (Index a = 0; a < n_art; ++a) {
    const Index i = art_row[static_cast<std::size_t>(a)];
    tab.T(i, n_struct + a) = 1.0;
    basis[static_cast<std::size_t>(i)] = n_struct + a;
  }
  tab.basis = basis;
  tab.allowed.assign(static_cast<std::size_t>(n), 1);
  const int max_pivots = static_cast<int>(50 * (m + n) + 1000);

  LpResult out;
  Index unbounded_col = -1;
  if (n_art > 0) {
    Vec d = Vec::Zero(n);
    d.tail(n_art).setOnes();
    tab.set_costs(d);
    tab.run(max_pivots, unbounded_col);
    const double infeas = -tab.T(m, n);
    if (infeas > 1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
      out.status = LpStatus::Infeasible;
      out.pivots = tab.pivots;
      return out;
    }
    // Drive remaining artificials out of the basis where possible.
    for (Index i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] < n_struct) continue;
      Index col = -1;
      double best = kPivotTol;
      for (Index j = 0; j < n_struct; ++j) {
        if (std::abs(tab.T(i, j)) > best) {
          best = std::abs(tab.T(i, j));
          col = j;
        }
      }
      if (col >= 0) tab.pivot(i, col);
    }
    for (Index a = 0; a < n_art; ++a) tab.allowed[static_cast<std::size_t>(n_struct + a)] = 0;
  }

  Vec d = Vec::Zero(n);
  d.head(nx) = -p.c;
  d.segment(nx, nx) = p.c;
  tab.set_costs(d);
  const auto outcome = tab.run(max_pivots, unbounded_col);
  out.pivots = tab.pivots;

  // Recompute the basic solution from the original data.
  Mat Afull = Mat::Zero(m, n);
  Afull.leftCols(n_struct) = A;
  for (Index a = 0; a < n_art; ++a) Afull(art_row[static_cast<std::size_t>(a)], n_struct + a) = 1.0;
  Vec y = Vec::Zero(n);
  if (m > 0) {
    Mat Bm(m, m);
    for (Index i = 0; i < m; ++i) Bm.col(i) = Afull.col(tab.basis[static_cast<std::size_t>(i)]);
    Eigen::PartialPivLU<Mat> lu(Bm);
    Vec yb = lu.solve(b);
    if (!yb.allFinite() || (Bm * yb - b).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, b.lpNorm<Eigen::Infinity>()))
      yb = tab.T.col(n).head(m);
    for (Index i = 0; i < m; ++i) y(tab.basis[static_cast<std::size_t>(i)]) = std::max(yb(i), 0.0);
  }
  out.x = y.head(nx) - y.segment(nx, nx);
  out.value = p.c.dot(out.x);

  if (outcome == Tableau::Outcome::Unbounded) {
    out.status = LpStatus::Unbounded;
    Vec dir = Vec::Zero(n);
    dir(unbounded_col) = 1.0;
    for (Index i = 0; i < m; ++i) dir(tab.basis[static_cast<std::size_t>(i)]) -= tab.T(i, unbounded_col);
    out.ray = dir.head(nx) - dir.segment(nx, nx);
    const double nr = out.ray.norm();
    if (nr > 0.0) out.ray /= nr;
    return out;
  }
  out.status = LpStatus::Optimal;
  return out;
}

// --------------------------------------------------------------------- QP

namespace {

struct KktSolver {
  Eigen::PartialPivLU<Mat> lu;
  Index n = 0;
  Index me = 0;

  void factor(const Mat& P, const Mat& E, const Mat& GtG, double sigma, double rho) {
    n = P.rows();
    me = E.rows();
    Mat K = Mat::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = P + rho * GtG;
    K.topLeftCorner(n, n).diagonal().array() += sigma;
    if (me > 0) {
      K.topRightCorner(n, me) = E.transpose();
      K.bottomLeftCorner(me, n) = E;
      // Tiny regularization keeps redundant equality rows solvable.
      K.bottomRightCorner(me, me).diagonal().array() -= 1e-13;
    }
    lu.compute(K);
  }

  Vec solve(const Vec& rhs_x, const Vec& f) const {
    Vec rhs(n + me);
    rhs.head(n) = rhs_x;
    if (me > 0) rhs.tail(me) = f;
    return lu.solve(rhs).head(n);
  }
};

// Equality-constrained QP on an active set; returns false if it fails the
// primal/dual feasibility checks.
bool qp_polish(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G, const Vec& u, Vec& x) {
  const Index n = P.rows();
  std::vector<Index> active;
  for (Index i = 0; i < G.rows(); ++i)
    if (u(i) < 0.0) active.push_back(i);
  const Index me = E.rows();
  const auto ma = static_cast<Index>(active.size());
  Mat K = Mat::Zero(n + me + ma, n + me + ma);
  Vec rhs = Vec::Zero(n + me + ma);
  K.topLeftCorner(n, n) = P;
  K.topLeftCorner(n, n).diagonal().array() += 1e-12;
  rhs.head(n) = -q;
  if (me > 0) {
    K.block(0, n, n, me) = E.transpose();
    K.block(n, 0, me, n) = E;
    rhs.segment(n, me) = f;
  }
  for (Index a = 0; a < ma; ++a) {
    const auto g = G.row(active[static_cast<std::size_t>(a)]);
    K.block(0, n + me + a, n, 1) = -g.transpose();
    K.block(n + me + a, 0, 1, n) = g;
  }
  Eigen::FullPivLU<Mat> lu(K);
  const Vec sol = lu.solve(rhs);
  if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
    return false;
  const Vec xc = sol.head(n);
  const Vec mult = sol.tail(ma);  // stationarity: P x + q + E^T nu - G_A^T mult = 0, mult >= 0
  if (ma > 0 && mult.minCoeff() < -1e-9) return false;
  if (G.rows() > 0 && (G * xc).minCoeff() < -1e-10 * std::max(1.0, xc.lpNorm<Eigen::Infinity>())) return false;
  x = xc;
  return true;
}

}  // namespace

QpResult qp_dual_active_set(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G, const Vec& h) {
  const Index n = q.size();
  if (P.rows() != n || P.cols() != n || E.cols() != n || G.cols() != n || E.rows() != f.size() ||
      G.rows() != h.size())
    throw Error(ErrorKind::ShapeMismatch, "qp_dual_active_set: inconsistent shapes");
  Eigen::LLT<Mat> llt(P);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidArgument, "qp_dual_active_set needs P > 0");
  const Mat Pinv = llt.solve(Mat::Identity(n, n));

  QpResult out;
  Vec x = -Pinv * q;
  Mat N(n, 0);             // active normals
  Vec u(0);                // their multipliers
  std::vector<Index> ids;  // inequality index, or -1 for an equality

  Vec z(n), r(0);
  auto step_dirs = [&](const Vec& np) {
    const Vec pn = Pinv * np;
    if (N.cols() == 0) {
      z = pn;
      r.resize(0);
      return;
    }
    const Mat PN = Pinv * N;
    const Mat M = N.transpose() * PN;
    r = M.ldlt().solve(N.transpose() * pn);
    z = pn - PN * r;
  };
  auto add = [&](const Vec& np, double mult, Index id) {
    N.conservativeResize(n, N.cols() + 1);
    N.col(N.cols() - 1) = np;
    u.conservativeResize(u.size() + 1);
    u(u.size() - 1) = mult;
    ids.push_back(id);
  };
  auto drop = [&](Index k) {
    const Index q_ = N.cols();
    for (Index j = k; j + 1 < q_; ++j) {
      N.col(j) = N.col(j + 1);
      u(j) = u(j + 1);
    }
    N.conservativeResize(n, q_ - 1);
    u.conservativeResize(q_ - 1);
    ids.erase(ids.begin() + k);
  };
  auto finish = [&](QpStatus st) {
    out.x = x;
    out.status = st;
    double pr = 0.0;
    if (E.rows() > 0) pr = (E * x - f).cwiseAbs().maxCoeff();
    if (G.rows() > 0) pr = std::max(pr, (h - G * x).cwiseMax(0.0).maxCoeff());
    out.primal_residual = pr;
    out.dual_residual = (P * x + q - N * u).norm();
    return out;
  };

  for (Index i = 0; i < E.rows(); ++i) {
    const Vec np = E.row(i).transpose();
    const double s = np.dot(x) - f(i);
    step_dirs(np);
    const double zn = z.dot(np);
    if (!(zn > 1e-14 * np.squaredNorm())) {
      if (std::abs(s) <= 1e-10 * std::max(1.0, std::abs(f(i)))) continue;
      return finish(QpStatus::Infeasible);
    }
    const double t = -s / zn;
    x += t * z;
    if (r.size() > 0) u -= t * r;
    add(np, t, -1);
  }

  const long budget = 50L * (G.rows() + n) + 100;
  long steps = 0;
  while (G.rows() > 0) {
    const Vec s_all = G * x - h;
    Index p = 0;
    const double smin = s_all.minCoeff(&p);
    const double tol = 1e-12 * std::max({1.0, std::abs(h(p)), G.row(p).norm() * x.norm()});
    if (smin >= -tol) break;
    const Vec np = G.row(p).transpose();
    double sp = smin;
    double up = 0.0;
    for (;;) {
      if (++steps > budget) return finish(QpStatus::MaxIterations);
      step_dirs(np);
      double t1 = std::numeric_limits<double>::infinity();
      Index k = -1;
      for (Index j = 0; j < r.size(); ++j) {
        if (ids[static_cast<std::size_t>(j)] < 0 || !(r(j) > 1e-14)) continue;
        const double tj = u(j) / r(j);
        if (tj < t1) {
          t1 = tj;
          k = j;
        }
      }
      const double zn = z.dot(np);
      const double t2 = zn > 1e-14 * np.squaredNorm() ? -sp / zn : std::numeric_limits<double>::infinity();
      if (std::isinf(t1) && std::isinf(t2)) return finish(QpStatus::Infeasible);
      const double t = std::min(t1, t2);
      if (r.size() > 0) u -= t * r;
      up += t;
      if (!std::isinf(t2)) {
        x += t * z;
        sp += t * zn;
      }
      if (t2 <= t1) {
        add(np, up, p);
        break;
      }
      drop(k);
    }
    ++out.iterations;
  }
  return finish(QpStatus::Solved);
}

QpResult qp_affine_nonneg(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G,
                          const QpOptions& opts) {
  const Index n = q.size();
  if (P.rows() != n || P.cols() != n || (E.rows() > 0 && E.cols() != n) || E.rows() != f.size() ||
      (G.rows() > 0 && G.cols() != n))
    throw Error(ErrorKind::ShapeMismatch, "qp_affine_nonneg: inconsistent dimensions");

  QpResult out;
  const Mat GtG = G.transpose() * G;
  double rho = opts.rho;
  KktSolver kkt;
  kkt.factor(P, E, GtG, opts.sigma, rho);

  if (E.rows() > 0) {
    // Equality consistency check via least squares.
    const Vec x_ls = E.completeOrthogonalDecomposition().solve(f);
    if ((E * x_ls - f).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, f.lpNorm<Eigen::Infinity>())) {
      out.status = QpStatus::Infeasible;
      out.x = x_ls;
      return out;
    }
  }

  Vec x = Vec::Zero(n);
  Vec z = G.rows() > 0 ? Vec((G * x).cwiseMax(0.0)) : Vec();
  Vec u = Vec::Zero(G.rows());
  Vec du_prev = Vec::Zero(G.rows());
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Vec rhs = opts.sigma * x - q + rho * G.transpose() * (z - u);
    const Vec x_new = kkt.solve(rhs, f);
    const Vec Gx = G * x_new;
    const Vec z_new = (Gx + u).cwiseMax(0.0);
    const Vec du = Gx - z_new;
    u += du;
    out.primal_residual = G.rows() > 0 ? du.lpNorm<Eigen::Infinity>() : 0.0;
    out.dual_residual = G.rows() > 0 ? (rho * G.transpose() * (z_new - z)).lpNorm<Eigen::Infinity>() : 0.0;
    out.dual_residual = std::max(out.dual_residual, opts.sigma * (x_new - x).lpNorm<Eigen::Infinity>());
    x = x_new;
    z = z_new;
    out.iterations = it;

    const double scale_p = std::max({1.0, Gx.size() ? Gx.lpNorm<Eigen::Infinity>() : 0.0});
    const double scale_d = std::max({1.0, q.lpNorm<Eigen::Infinity>(), (P * x).lpNorm<Eigen::Infinity>()});
    if (out.primal_residual <= opts.eps * scale_p && out.dual_residual <= opts.eps * scale_d) {
      out.status = QpStatus::Solved;
      break;
    }
    // Primal infeasibility: dual increments settle on a nonzero certificate.
    if (G.rows() > 0 && it % 50 == 0) {
      const double dn = du.lpNorm<Eigen::Infinity>();
      if (dn > 1e-6 && (du - du_prev).lpNorm<Eigen::Infinity>() <= 1e-9 * dn) {
        out.status = QpStatus::Infeasible;
        out.x = x;
        return out;
      }
      du_prev = du;
    }
    if (it % 25 == 0 && G.rows() > 0) {
      const double ratio = std::sqrt((out.primal_residual / scale_p) / std::max(out.dual_residual / scale_d, 1e-300));
      if (ratio > 5.0 || ratio < 0.2) {
        const double new_rho = std::clamp(rho * ratio, 1e-6, 1e6);
        u *= rho / new_rho;
        rho = new_rho;
        kkt.factor(P, E, GtG, opts.sigma, rho);
      }
    }
  }
  if (opts.polish && G.rows() > 0) {
    Vec xp = x;
    if (qp_polish(P, q, E, f, G, u, xp)) {
      x = xp;
      out.status = QpStatus::Solved;
      out.primal_residual = std::max(0.0, -(G * x).minCoeff());
    }
  }
  out.x = x;
  return out;
}

// ------------------------------------------------------------------- MVEE

Ellipsoid mvee_centered(const Mat& points, double tol, int max_iters) {
  require_finite(points, "mvee points");
  const Index M = points.rows();
  const Index N = points.cols();
  if (M == 0 || N == 0) throw Error(ErrorKind::DegenerateSpan, "mvee: empty point set");
  {
    Eigen::SelfAdjointEigenSolver<Mat> eig(points * points.transpose(), Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top)
      throw Error(ErrorKind::DegenerateSpan, "mvee: points do not span the space");
  }
  const double dim = static_cast<double>(M);
  Vec u = Vec::Constant(N, 1.0 / static_cast<double>(N));
  Ellipsoid out;
  Vec kappa(N);
  Mat Sinv;
  for (int it = 0; it < max_iters; ++it) {
    const Mat S = points * u.asDiagonal() * points.transpose();
    Sinv = S.llt().solve(Mat::Identity(M, M));
    kappa = (points.transpose() * Sinv).cwiseProduct(points.transpose()).rowwise().sum();
    Index jmax = 0;
    kappa.maxCoeff(&jmax);
    Index jmin = -1;
    for (Index j = 0; j < N; ++j)
      if (u(j) > 0.0 && (jmin < 0 || kappa(j) < kappa(jmin))) jmin = j;
    const double up = kappa(jmax) / dim - 1.0;
    const double down = 1.0 - kappa(jmin) / dim;
    out.iterations = it;
    if (up <= tol && down <= tol) break;
    if (up >= down) {
      const double step = (kappa(jmax) - dim) / (dim * (kappa(jmax) - 1.0));
      u *= 1.0 - step;
      u(jmax) += step;
    } else {
      // Away step, clipped so the weight stays nonnegative.
      double step = (dim - kappa(jmin)) / (dim * (kappa(jmin) - 1.0));
      const double cap = u(jmin) / (1.0 - u(jmin));
      if (!(step > 0.0) || step > cap) step = cap;
      u *= 1.0 + step;
      u(jmin) -= step;
      if (u(jmin) < 1e-300) u(jmin) = 0.0;
    }
  }
  const Mat S = points * u.asDiagonal() * points.transpose();
  Sinv = S.llt().solve(Mat::Identity(M, M));
  kappa = (points.transpose() * Sinv).cwiseProduct(points.transpose()).rowwise().sum();
  out.L = Sinv / kappa.maxCoeff();
  out.L = 0.5 * (out.L + out.L.transpose()).eval();
  return out;
}

// ------------------------------------------------- constrained least squares

double Regularizer::value(const Mat& Y) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::L1: return mu * Y.cwiseAbs().sum();
    case Kind::Fro: return mu * Y.squaredNorm();
  }
  return 0.0;
}

ProxFn prox_nonneg(Regularizer reg) {
  if (reg.mu < 0.0) throw Error(ErrorKind::InvalidArgument, "regularizer weight must be >= 0");
  switch (reg.kind) {
    case Regularizer::Kind::L1:
      return [mu = reg.mu](Mat& Y, double t) { Y = (Y.array() - 0.5 * t * mu).max(0.0).matrix(); };
    case Regularizer::Kind::Fro:
      return [mu = reg.mu](Mat& Y, double t) { Y = (Y.array().max(0.0) / (1.0 + t * mu)).matrix(); };
    case Regularizer::Kind::None:
      break;
  }
  return [](Mat& Y, double) { Y = Y.cwiseMax(0.0); };
}

ProxFn prox_column_simplex(double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "simplex radius must be > 0");
  return [radius](Mat& Y, double) {
    for (Index j = 0; j < Y.cols(); ++j) Y.col(j) = simplex_project(Y.col(j), radius);
  };
}

void constrained_ls_admm(const Mat& A, const Mat& B, const ProxFn& prox, AdmmState& state,
                         const AdmmOptions& opts) {
  const Index R = A.cols();
  const Index N = B.cols();
  if (A.rows() != B.rows()) throw Error(ErrorKind::ShapeMismatch, "constrained_ls_admm: A and B rows differ");
  const Mat AtA = A.transpose() * A;
  const Mat AtB = A.transpose() * B;
  const double rho = std::max(AtA.trace() / static_cast<double>(std::max<Index>(R, 1)), 1e-12);
  Mat K = AtA;
  K.diagonal().array() += rho;
  const Eigen::LLT<Mat> llt(K);
  if (state.Y.rows() != R || state.Y.cols() != N) state.Y = Mat::Zero(R, N);
  if (state.U.rows() != R || state.U.cols() != N) state.U = Mat::Zero(R, N);
  Mat& Z = state.Y;
  Mat& U = state.U;
  state.converged = false;
  state.iterations = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Mat Yt = llt.solve(AtB + rho * (Z - U));
    Mat Znew = Yt + U;
    prox(Znew, 1.0 / rho);
    U += Yt - Znew;
    const double r = (Yt - Znew).norm();
    const double s = (Znew - Z).norm();
    Z = std::move(Znew);
    state.iterations = it;
    const double zn = std::max(Z.norm(), 1e-300);
    const double un = std::max(U.norm(), 1e-300);
    if (r <= opts.tol * zn && s <= opts.tol * std::max(un, zn)) {
      state.converged = true;
      break;
    }
  }
}

}  // namespace nmfident

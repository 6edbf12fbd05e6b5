#pragma once

#include "nmfident/core.hpp"

#include <functional>

namespace nmfident {

// ------------------------------------------------------------ projections

/// Euclidean projection onto {x >= 0, 1^T x = radius}.
Vec simplex_project(const Vec& v, double radius = 1.0);

/// Euclidean projection onto {x : ||x||_1 <= radius}.
Vec l1_ball_project(const Vec& v, double radius);

/// Row-wise prox of lam * ||row||_inf, via Moreau: row - proj_{lam * B1}(row).
Mat prox_row_inf(const Mat& V, double lam);

// ------------------------------------------------------------------- NNLS

struct NnlsResult {
  Mat X;
  double kkt = 0.0;  // max |min(X, grad)| after scaling
  int iterations = 0;
  bool converged = false;
};

/// Column-wise min ||B - A X||_F s.t. X >= 0.
///
/// Accelerated projected gradient (step 1/sigma_max(A^T A), adaptive
/// restart), finished by a least-squares solve on the detected support that
/// is kept only when it lowers the objective.
NnlsResult nnls_solve(const Mat& A, const Mat& B, int max_iters = 5000, double tol = 1e-10);

/// nnls_solve(A, B).X; warns when the iteration cap is hit.
Mat nnls(const Mat& A, const Mat& B);

// --------------------------------------------------------------------- LP

/// maximize c^T x  s.t.  E x = f,  G x >= h,  x free.
struct LpProblem {
  Vec c;
  Mat E;
  Vec f;
  Mat G;
  Vec h;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
const char* to_string(LpStatus s) noexcept;

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;        // optimal vertex, or a feasible point when unbounded
  double value = 0.0;
  Vec ray;      // improving feasible direction when unbounded
  int pivots = 0;
};

/// Two-phase dense simplex. Dantzig pricing, switching to Bland's rule after
/// a run of degenerate pivots. The final basic solution is recomputed from
/// the original data so constraints hold to solve precision.
/// Throws LpFailure if the pivot budget is exhausted.
LpResult lp_solve(const LpProblem& p);

// --------------------------------------------------------------------- QP

enum class QpStatus { Solved, MaxIterations, Infeasible };

struct QpResult {
  Vec x;
  QpStatus status = QpStatus::MaxIterations;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double rho = 1.0;
  double sigma = 1e-6;
  double eps = 1e-9;
  int max_iters = 5000;
  bool polish = true;
};

/// min 1/2 x^T P x + q^T x  s.t.  E x = f,  G x >= 0  by ADMM.
///
/// Equalities are kept inside each linear solve; Gx >= 0 is split off with a
/// residual-balanced penalty. A final active-set polish is accepted when it
/// is primal and dual feasible.
QpResult qp_affine_nonneg(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G,
                          const QpOptions& opts = {});

/// min 1/2 x^T P x + q^T x  s.t.  E x = f,  G x >= h for positive definite P,
/// by the Goldfarb-Idnani dual active-set method. Exact up to round-off, meant
/// for small dense problems. Status Infeasible when a violated constraint
/// cannot be added.
QpResult qp_dual_active_set(const Mat& P, const Vec& q, const Mat& E, const Vec& f, const Mat& G, const Vec& h);

// ------------------------------------------------------------------- MVEE

struct Ellipsoid {
  Mat L;  // {x : x^T L x <= 1}
  int iterations = 0;
};

/// Minimum-volume origin-centred ellipsoid enclosing the columns of `points`
/// and their negations. Frank-Wolfe with away steps on the D-optimal design
/// dual; the result is scaled so every point satisfies x^T L x <= 1.
/// Throws DegenerateSpan when the points do not span R^M.
Ellipsoid mvee_centered(const Mat& points, double tol = 1e-7, int max_iters = 200000);

// ------------------------------------------------- constrained least squares

struct Regularizer {
  enum class Kind { None, L1, Fro };
  Kind kind = Kind::None;
  double mu = 0.0;

  /// Value added to ||X - W H^T||_F^2: mu * ||Y||_1 or mu * ||Y||_F^2.
  double value(const Mat& Y) const;
};

/// In-place prox of t * g (g is a closed convex function of Y).
using ProxFn = std::function<void(Mat& Y, double t)>;

/// prox for Y >= 0 plus half of the given regularizer (the smooth term is
/// taken as 1/2 ||B - A Y||^2, so mu is halved to match ||.||^2 scaling).
ProxFn prox_nonneg(Regularizer reg = {});
/// Each column of Y projected onto {y >= 0, 1^T y = radius}.
ProxFn prox_column_simplex(double radius = 1.0);

struct AdmmOptions {
  double tol = 1e-6;
  int max_iters = 500;
};

struct AdmmState {
  Mat Y;  // feasible iterate (output of the prox)
  Mat U;  // scaled dual, reused as a warm start
  int iterations = 0;
  bool converged = false;
};

/// min_Y 1/2 ||B - A Y||_F^2 + g(Y) by ADMM with rho = trace(A^T A)/R and a
/// cached Cholesky factor. `state` supplies and receives the warm start.
void constrained_ls_admm(const Mat& A, const Mat& B, const ProxFn& prox, AdmmState& state,
                         const AdmmOptions& opts = {});

}  // namespace nmfident

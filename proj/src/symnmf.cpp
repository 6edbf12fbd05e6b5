#include "nmfident/symnmf.hpp"

#include "nmfident/convexkit.hpp"
#include "nmfident/detnmf.hpp"
#include "nmfident/matcore.hpp"
#include "nmfident/plainnmf.hpp"
#include "nmfident/random.hpp"
#include "nmfident/sepnmf.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace nmfident {

namespace {

void require_square(const Mat& X, Index R) {
  require_finite(X, "X");
  if (X.rows() != X.cols()) throw Error(ErrorKind::ShapeMismatch, "X must be square");
  if (R < 1 || R > X.rows()) throw Error(ErrorKind::InvalidArgument, "rank out of range");
}

void require_symmetric(const Mat& X) {
  const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw Error(ErrorKind::NotSymmetric, "X is not symmetric within 1e-8");
}

}  // namespace

Mat psd_sqrt(const Mat& X, Index R) {
  require_square(X, R);
  require_symmetric(X);
  const Index N = X.rows();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.transpose()));
  const Vec& lam = es.eigenvalues();  // ascending
  const double scale = lam.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw Error(ErrorKind::RankDeficient, "X is zero");
  Mat B(R, N);
  for (Index r = 0; r < R; ++r) {
    const double l = lam(N - 1 - r);
    if (l < -1e-8 * scale) {
      std::ostringstream os;
      os << "eigenvalue " << r + 1 << " is " << l << "; X is not PSD at rank " << R;
      throw Error(ErrorKind::RankDeficient, os.str());
    }
    B.row(r) = std::sqrt(std::max(l, 0.0)) * es.eigenvectors().col(N - 1 - r).transpose();
  }
  return B;
}

// ---------------------------------------------------------------- Procrustes

namespace {

SymNmfResult procrustes_run(const Mat& Bt, Index R, int iters, std::uint64_t seed) {
  const Index N = Bt.rows();
  CounterRng rng(derive_seed(seed, {0x5e11}));
  SymNmfResult out;
  out.W = uniform_matrix(rng, N, R);
  const double wn = out.W.norm();
  if (wn > 0.0) out.W *= Bt.norm() / wn;
  const Mat I = Mat::Identity(R, R);
  for (int it = 1; it <= iters; ++it) {
    Eigen::JacobiSVD<Mat> svd(out.W.transpose() * Bt, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.G = svd.matrixU() * svd.matrixV().transpose();
    out.max_orth_error = std::max(out.max_orth_error, (out.G * out.G.transpose() - I).cwiseAbs().maxCoeff());
    out.W = (Bt * out.G.transpose()).cwiseMax(0.0);
    out.trace.push_back((Bt - out.W * out.G).squaredNorm());
    out.iterations = it;
    if (stalled(out.trace, 1e-13, 10)) break;
  }
  return out;
}

}  // namespace

SymNmfResult symnmf_procrustes(const Mat& X, Index R, int iters, std::uint64_t seed, int restarts) {
  if (iters < 1 || restarts < 1) throw Error(ErrorKind::InvalidArgument, "iters and restarts must be >= 1");
  const Mat Bt = psd_sqrt(X, R).transpose();
  SymNmfResult best;
  for (int k = 0; k < restarts; ++k) {
    SymNmfResult r = procrustes_run(Bt, R, iters, restarts == 1 ? seed : derive_seed(seed, {0x2e57, static_cast<std::uint64_t>(k)}));
    if (k == 0 || r.trace.back() < best.trace.back()) best = std::move(r);
  }
  return best;
}

// ------------------------------------------------------- tri-factorization

namespace {

enum class EProj { Free, JointSimplex };

Mat det_abs_grad(const Mat& E) {
  const Index R = E.rows();
  const double d = E.partialPivLu().determinant();
  Mat g(R, R);
  for (Index j = 0; j < R; ++j) g.row(j) = cofactor_row(E, j).transpose();
  return (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) * g;
}

double tri_objective(const Mat& X, const Mat& C, const Mat& E, double lam) {
  const double fit = (X - C * E * C.transpose()).squaredNorm();
  return lam == 0.0 ? fit : fit + lam * std::abs(E.partialPivLu().determinant());
}

void project_columns(Mat& C) {
  for (Index r = 0; r < C.cols(); ++r) C.col(r) = simplex_project(C.col(r));
}

void project_block(Mat& E, EProj p) {
  if (p == EProj::Free) return;
  Eigen::Map<Vec> v(E.data(), E.size());
  v = simplex_project(Vec(v));
}

/// One projected-gradient step with backtracking; Y must be feasible.
/// Keeps Y (and returns fcur) when no step passes the sufficient-decrease test.
template <class F, class G, class P>
double pg_step(Mat& Y, double& t, double fcur, const F& f, const G& grad, const P& proj) {
  const Mat g = grad(Y);
  for (int k = 0; k < 60; ++k) {
    Mat Z = Y - t * g;
    proj(Z);
    const Mat D = Z - Y;
    const double dn = D.squaredNorm();
    if (dn == 0.0) return fcur;
    const double fz = f(Z);
    if (fz <= fcur + (g.array() * D.array()).sum() + dn / (2.0 * t) && fz <= fcur) {
      Y = std::move(Z);
      t *= 1.5;
      return fz;
    }
    t *= 0.5;
  }
  return fcur;
}

void tri_descent(const Mat& X, Mat& C, Mat& E, double lam, EProj ep, int iters, Trace& trace, int& its) {
  double tc = 1.0, te = 1.0;
  double f = tri_objective(X, C, E, lam);
  trace.assign(1, f);
  its = 0;
  for (int it = 1; it <= iters; ++it) {
    const auto fc = [&](const Mat& Cv) { return tri_objective(X, Cv, E, lam); };
    const auto gc = [&](const Mat& Cv) {
      const Mat Rz = X - Cv * E * Cv.transpose();
      return Mat(-2.0 * (Rz * Cv * E.transpose() + Rz.transpose() * Cv * E));
    };
    for (int k = 0; k < 5; ++k) f = pg_step(C, tc, f, fc, gc, project_columns);

    const auto fe = [&](const Mat& Ev) { return tri_objective(X, C, Ev, lam); };
    const auto ge = [&](const Mat& Ev) {
      Mat g = -2.0 * C.transpose() * (X - C * Ev * C.transpose()) * C;
      if (lam != 0.0) g += lam * det_abs_grad(Ev);
      return g;
    };
    const auto pe = [ep](Mat& Ev) { project_block(Ev, ep); };
    for (int k = 0; k < 5; ++k) f = pg_step(E, te, f, fe, ge, pe);

    trace.push_back(f);
    its = it;
    if (stalled(trace, 1e-10, 20)) break;
  }
}

/// Column-stochastic start from the SPA anchors of X.
Mat anchor_start(const Mat& X, Index R) {
  const Mat A = X.cwiseAbs();
  const IndexList keep = nonzero_columns(A);
  if (static_cast<Index>(keep.size()) < R) throw Error(ErrorKind::RankDeficient, "fewer nonzero columns than rank");
  const Mat Xn = l1_normalize_columns(select_columns(A, keep)).Xbar;
  const AnchorSet a = spa(Xn, R);
  Mat C(X.rows(), R);
  for (Index r = 0; r < R; ++r) C.col(r) = simplex_project(Xn.col(a[static_cast<std::size_t>(r)]));
  return C;
}

TriFactor trifactor_rank_one(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.transpose()));
  const Index N = X.rows();
  Vec u = es.eigenvectors().col(N - 1);
  if (u.sum() < 0.0) u = -u;
  const double s = u.sum();
  if (!(s > 0.0)) throw Error(ErrorKind::RankDeficient, "principal direction sums to zero");
  TriFactor t;
  t.C = (u / s).cwiseMax(0.0);
  t.C /= t.C.sum();
  t.E = Mat::Constant(1, 1, es.eigenvalues()(N - 1) * s * s);
  return t;
}

}  // namespace

TriFactor trifactor_fit(const Mat& X, Index R, TriMode mode, double lam, int iters) {
  require_square(X, R);
  require_symmetric(X);
  if (mode == TriMode::ExactSubspace) {
    if (R == 1) return trifactor_rank_one(X);
    const Mat B = psd_sqrt(X, R);
    DetFitConfig cfg;
    cfg.rank = R;
    cfg.variant = DetVariant::ColSum;
    cfg.rho = 1.0;
    cfg.iters = iters;
    const DetFitResult r = alp_fit(B, cfg);
    TriFactor t;
    t.C = r.pair.H;
    t.iterations = r.iterations;
    // B = G C^T, refit on the clipped C.
    const Mat G = t.C.colPivHouseholderQr().solve(B.transpose()).transpose();
    t.E = G.transpose() * G;
    t.E = 0.5 * (t.E + t.E.transpose());
    return t;
  }
  if (lam < 0.0) throw Error(ErrorKind::InvalidArgument, "lam must be >= 0");
  TriFactor t;
  t.C = anchor_start(X, R);
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(t.C);
  const Mat P = cod.pseudoInverse();
  t.E = P * X * P.transpose();
  tri_descent(X, t.C, t.E, lam, EProj::Free, iters, t.trace, t.iterations);
  return t;
}

HmmEstimate hmm_estimate(const Mat& Omega, Index R, double lam, int iters, std::uint64_t seed) {
  require_square(Omega, R);
  if (Omega.minCoeff() < 0.0) throw Error(ErrorKind::NegativeInput, "Omega must be nonnegative");
  const double total = Omega.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroMatrix, "Omega sums to zero");
  const Mat W = Omega / total;
  if (lam < 0.0) lam = 0.1 * W.norm();

  HmmEstimate h;
  h.M_emit = anchor_start(W + W.transpose(), R);
  CounterRng rng(derive_seed(seed, {0x7e7a}));
  Mat T = Mat::Zero(R, R);
  for (Index i = 0; i < R; ++i) {
    if (R == 1) {
      T(i, i) = 1.0;
      break;
    }
    Vec u = uniform_matrix(rng, R - 1, 1).col(0);
    u *= 0.5 / u.sum();
    T(i, i) = 0.5;
    for (Index j = 0, k = 0; j < R; ++j)
      if (j != i) T(i, j) = u(k++);
  }
  h.Theta = T / static_cast<double>(R);
  if (lam > 0.0) {
    // |det Theta| has a kink at 0 where descent can park with a poor fit, so
    // a second run first fits with lam = 0 and then switches the term on.
    Mat M2 = h.M_emit, Th2 = h.Theta;
    Trace tr2;
    int it2 = 0;
    tri_descent(W, M2, Th2, 0.0, EProj::JointSimplex, iters, tr2, it2);
    Trace tail;
    int it3 = 0;
    tri_descent(W, M2, Th2, lam, EProj::JointSimplex, iters, tail, it3);
    tri_descent(W, h.M_emit, h.Theta, lam, EProj::JointSimplex, iters, h.trace, h.iterations);
    if (tail.back() < h.trace.back()) {
      h.M_emit = std::move(M2);
      h.Theta = std::move(Th2);
      h.trace = std::move(tail);
      h.iterations = it2 + it3;
    }
  } else {
    tri_descent(W, h.M_emit, h.Theta, lam, EProj::JointSimplex, iters, h.trace, h.iterations);
  }

  h.Transition = h.Theta;
  for (Index i = 0; i < R; ++i) {
    const double s = h.Theta.row(i).sum();
    if (s < 1e-12) {
      std::ostringstream os;
      os << "row " << i << " of Theta sums to " << s;
      throw Error(ErrorKind::DegenerateTheta, os.str());
    }
    h.Transition.row(i) /= s;
  }
  return h;
}

Mat cooccurrence(const std::vector<int>& tokens, Index M) {
  if (tokens.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two tokens");
  if (M < 1) throw Error(ErrorKind::InvalidArgument, "M must be positive");
  Mat Om = Mat::Zero(M, M);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] < 0 || tokens[t] >= M) {
      std::ostringstream os;
      os << "token " << tokens[t] << " at position " << t << " is outside [0, " << M << ")";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
    if (t > 0) Om(tokens[t - 1], tokens[t]) += 1.0;
  }
  return Om / static_cast<double>(tokens.size() - 1);
}

}  // namespace nmfident

#include "nmfident/sepnmf.hpp"

#include "nmfident/convexkit.hpp"
#include "nmfident/detnmf.hpp"
#include "nmfident/matcore.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nmfident {

namespace {

void check_rank_arg(const Mat& X, Index R) {
  require_finite(X, "X");
  if (R < 1 || R > std::min(X.rows(), X.cols())) {
    std::ostringstream os;
    os << "rank " << R << " must lie in [1, min(M, N)] for a " << X.rows() << "x" << X.cols() << " matrix";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

// Score monotone in ||r||_q. For q = 2 this is r.dot(r), which is exactly the
// diagonal entry sd_somp computes, so the two greedy rules see identical bits.
double q_score(const Mat& Rm, Index l, double q) {
  if (q == 2.0) return Rm.col(l).dot(Rm.col(l));
  if (std::isinf(q)) return Rm.col(l).lpNorm<Eigen::Infinity>();
  return Rm.col(l).array().abs().pow(q).sum();
}

double score_to_norm(double s, double q) {
  if (q == 2.0) return std::sqrt(s);
  if (std::isinf(q)) return s;
  return std::pow(s, 1.0 / q);
}

void deflate(Mat& Rm, Index pick) {
  const Vec u = Rm.col(pick) / Rm.col(pick).norm();
  const Eigen::RowVectorXd coef = u.transpose() * Rm;
  Rm.noalias() -= u * coef;
  Rm.col(pick).setZero();
}

[[noreturn]] void collapse(Index k, Index R) {
  std::ostringstream os;
  os << "projected data collapsed after " << k << " of " << R << " picks";
  throw Error(ErrorKind::RankDeficient, os.str());
}

constexpr double kCollapseTol = 1e-12;

}  // namespace

GreedyResult spa_detailed(const Mat& X, Index R, double q) {
  check_rank_arg(X, R);
  if (!(q > 1.0)) throw Error(ErrorKind::InvalidArgument, "spa needs q > 1");
  GreedyResult out;
  out.residual = X;
  double first = 0.0;
  for (Index k = 0; k < R; ++k) {
    Index best = 0;
    double best_score = -1.0;
    for (Index l = 0; l < X.cols(); ++l) {
      const double s = q_score(out.residual, l, q);
      if (s > best_score) {
        best_score = s;
        best = l;
      }
    }
    const double nrm = score_to_norm(best_score, q);
    if (k == 0) first = nrm;
    if (!(nrm > kCollapseTol * first) || first == 0.0) collapse(k, R);
    out.anchors.push_back(best);
    deflate(out.residual, best);
  }
  return out;
}

AnchorSet spa(const Mat& X, Index R, double q) { return spa_detailed(X, R, q).anchors; }

AnchorSet sd_somp(const Mat& X, Index R) {
  check_rank_arg(X, R);
  Mat Rm = X;
  AnchorSet anchors;
  const Index N = X.cols();
  double first = 0.0;
  std::vector<double> score(static_cast<std::size_t>(N));
  for (Index k = 0; k < R; ++k) {
    // ||R^T r_l||_inf for every l, from the symmetric Gram matrix.
    std::fill(score.begin(), score.end(), 0.0);
    for (Index l = 0; l < N; ++l) {
      for (Index n = l; n < N; ++n) {
        const double g = std::abs(Rm.col(n).dot(Rm.col(l)));
        score[static_cast<std::size_t>(l)] = std::max(score[static_cast<std::size_t>(l)], g);
        score[static_cast<std::size_t>(n)] = std::max(score[static_cast<std::size_t>(n)], g);
      }
    }
    Index best = 0;
    for (Index l = 1; l < N; ++l)
      if (score[static_cast<std::size_t>(l)] > score[static_cast<std::size_t>(best)]) best = l;
    const double nrm = std::sqrt(score[static_cast<std::size_t>(best)]);
    if (k == 0) first = nrm;
    if (!(nrm > kCollapseTol * first) || first == 0.0) collapse(k, R);
    anchors.push_back(best);
    deflate(Rm, best);
  }
  return anchors;
}

// ------------------------------------------------------------ self-dictionary

namespace {

double self_dict_objective(const Mat& X, const Mat& C, double lam) {
  double pen = 0.0;
  for (Index m = 0; m < C.rows(); ++m) pen += C.row(m).lpNorm<Eigen::Infinity>();
  return (X - X * C).squaredNorm() + lam * pen;
}

// prox of tau * sum_m ||C(m,:)||_inf + indicator(columns on simplex) at V,
// by ADMM on the split C = D. D and U carry the warm start.
void self_dict_prox(const Mat& V, double tau, Mat& D, Mat& U, int inner) {
  constexpr double rho = 1.0;
  for (int it = 0; it < inner; ++it) {
    const Mat C = prox_row_inf((V + rho * (D - U)) / (1.0 + rho), tau / (1.0 + rho));
    Mat Dn = C + U;
    for (Index j = 0; j < Dn.cols(); ++j) Dn.col(j) = simplex_project(Dn.col(j));
    U += C - Dn;
    D = std::move(Dn);
  }
}

}  // namespace

AnchorSet anchors_from_coefficients(const Mat& X, const Mat& C, Index R) {
  const Index N = C.rows();
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});
  Vec rown(N);
  for (Index m = 0; m < N; ++m) rown(m) = C.row(m).lpNorm<Eigen::Infinity>();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return rown(a) > rown(b); });
  AnchorSet out;
  for (Index cand : order) {
    if (static_cast<Index>(out.size()) == R) break;
    const double nc = X.col(cand).norm();
    if (!(nc > 0.0)) continue;
    bool dup = false;
    for (Index a : out) {
      const double cosv = X.col(cand).dot(X.col(a)) / (nc * X.col(a).norm());
      if (cosv > 0.999) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(cand);
  }
  if (static_cast<Index>(out.size()) < R) collapse(static_cast<Index>(out.size()), R);
  return out;
}

SelfDictResult self_dict_fit(const Mat& X, Index R, double lam, int iters) {
  check_rank_arg(X, R);
  const Index N = X.cols();
  if (lam <= 0.0) lam = 0.1 * X.squaredNorm() / static_cast<double>(N);
  const Mat G = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Mat> eig(G, Eigen::EigenvaluesOnly);
  const double Lip = 2.0 * std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  const double tau = lam / Lip;

  SelfDictResult out;
  Mat C = Mat::Constant(N, N, 1.0 / static_cast<double>(N));
  Mat Cprev = C, Y = C;
  Mat D = C, U = Mat::Zero(N, N);
  double t = 1.0;
  double f = self_dict_objective(X, C, lam);
  out.trace.push_back(f);
  for (int it = 1; it <= iters; ++it) {
    const Mat V = Y - (2.0 / Lip) * (G * Y - G);
    self_dict_prox(V, tau, D, U, it == 1 ? 100 : 20);
    const Mat Zk = D;
    const double fz = self_dict_objective(X, Zk, lam);
    Cprev = C;
    if (fz <= f) {
      C = Zk;
      f = fz;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Y = C + (t / t_next) * (Zk - C) + ((t - 1.0) / t_next) * (C - Cprev);
    t = t_next;
    out.trace.push_back(f);
    out.iterations = it;
    const double prev = out.trace[out.trace.size() - 2];
    if (it > 20 && prev - f <= 1e-12 * std::max(prev, 1e-300) && (Zk - C).norm() <= 1e-9 * std::max(C.norm(), 1.0))
      break;
  }
  out.C = std::move(C);
  out.anchors = anchors_from_coefficients(X, out.C, R);
  return out;
}

// ----------------------------------------------------------- ellipsoid rounding

AnchorSet ellipsoid_rounding(const Mat& X, Index R) {
  check_rank_arg(X, R);
  SubspaceEmbedding emb;
  try {
    emb = reduce_dimension(X, R);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) throw Error(ErrorKind::DegenerateSpan, e.what());
    throw;
  }
  const Ellipsoid ell = mvee_centered(emb.B);
  const Vec act = (emb.B.transpose() * ell.L).cwiseProduct(emb.B.transpose()).rowwise().sum();
  std::vector<Index> order(static_cast<std::size_t>(X.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return act(a) > act(b); });
  return AnchorSet(order.begin(), order.begin() + R);
}

// ---------------------------------------------------------------- factor

FactorPair separable_factor(const Mat& X, Index R, SeparableMethod method, AnchorSet* anchors_out) {
  check_rank_arg(X, R);
  // All-zero columns carry no direction; they get zero rows of H.
  const IndexList keep = nonzero_columns(X);
  if (static_cast<Index>(keep.size()) < R) throw Error(ErrorKind::RankDeficient, "fewer nonzero columns than rank");
  const Normalized norm = l1_normalize_columns(select_columns(X, keep));
  AnchorSet anchors;
  switch (method) {
    case SeparableMethod::Spa: anchors = spa(norm.Xbar, R); break;
    case SeparableMethod::SdSomp: anchors = sd_somp(norm.Xbar, R); break;
    case SeparableMethod::SelfDict: anchors = self_dict_fit(norm.Xbar, R).anchors; break;
    case SeparableMethod::Er: anchors = ellipsoid_rounding(norm.Xbar, R); break;
  }
  for (Index& a : anchors) a = keep[static_cast<std::size_t>(a)];
  FactorPair out;
  out.W.resize(X.rows(), R);
  for (Index r = 0; r < R; ++r) out.W.col(r) = X.col(anchors[static_cast<std::size_t>(r)]);
  out.H = nnls(out.W, X).transpose();
  out.nonneg_h = true;
  out.nonneg_w = norm.record.input_nonnegative;
  if (anchors_out) *anchors_out = anchors;
  return out;
}

}  // namespace nmfident

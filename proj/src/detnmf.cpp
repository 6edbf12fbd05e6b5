#include "nmfident/detnmf.hpp"

#include "nmfident/convexkit.hpp"
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

SubspaceEmbedding reduce_dimension(const Mat& X, Index R) {
  require_finite(X, "X");
  if (R < 1 || R > std::min(X.rows(), X.cols()))
    throw Error(ErrorKind::InvalidArgument, "reduce_dimension: rank out of range");
  Eigen::BDCSVD<Mat> svd(X, Eigen::ComputeThinU);
  SubspaceEmbedding out;
  out.singular_values = svd.singularValues();
  const Vec& s = out.singular_values;
  if (!(s(0) > 0.0) || s(R - 1) / s(0) <= 1e-10) {
    std::ostringstream os;
    os << "numerical rank of X is below " << R;
    throw Error(ErrorKind::RankDeficient, os.str());
  }
  out.back_map = svd.matrixU().leftCols(R);
  out.B = out.back_map.transpose() * X;
  out.energy_kept = s.head(R).squaredNorm() / s.squaredNorm();
  return out;
}

Vec cofactor_row(const Mat& Z, Index j) {
  const Index R = Z.rows();
  if (Z.cols() != R || j < 0 || j >= R) throw Error(ErrorKind::InvalidArgument, "cofactor_row: bad arguments");
  Vec r(R);
  if (R == 1) {
    r(0) = 1.0;
    return r;
  }
  Mat minor(R - 1, R - 1);
  for (Index k = 0; k < R; ++k) {
    for (Index a = 0, ra = 0; a < R; ++a) {
      if (a == j) continue;
      for (Index b = 0, cb = 0; b < R; ++b) {
        if (b == k) continue;
        minor(ra, cb++) = Z(a, b);
      }
      ++ra;
    }
    r(k) = (((j + k) % 2) ? -1.0 : 1.0) * minor.partialPivLu().determinant();
  }
  return r;
}

namespace {

// Column-normalized, reduced data placed on the hyperplane a^T b = 1.
struct VolMinData {
  IndexList keep;  // nonzero data columns; the rest get zero rows of H
  Index n_full = 0;
  Normalized norm;
  SubspaceEmbedding emb;
  Mat B;  // R x N
  Vec a;  // R
};

VolMinData prepare_volmin(const Mat& X, Index R) {
  VolMinData d;
  d.keep = nonzero_columns(X);
  d.n_full = X.cols();
  if (static_cast<Index>(d.keep.size()) < R) throw Error(ErrorKind::RankDeficient, "fewer nonzero columns than rank");
  d.norm = l1_normalize_columns(select_columns(X, d.keep));
  d.emb = reduce_dimension(d.norm.Xbar, R);
  d.B = d.emb.B;
  const Mat BBt = d.B * d.B.transpose();
  d.a = BBt.ldlt().solve(d.B * Vec::Ones(d.B.cols()));
  // Orthogonal projection onto a^T b = 1 (a no-op on exactly normalized
  // nonnegative data).
  const double an2 = d.a.squaredNorm();
  const Eigen::RowVectorXd gap = Eigen::RowVectorXd::Ones(d.B.cols()) - d.a.transpose() * d.B;
  d.B += d.a * gap / an2;
  return d;
}

Mat anchor_inverse(const Mat& B, const AnchorSet& anchors) {
  const Index R = B.rows();
  Mat S(R, R);
  for (Index r = 0; r < R; ++r) S.col(r) = B.col(anchors[static_cast<std::size_t>(r)]);
  Eigen::FullPivLU<Mat> lu(S);
  if (lu.rank() < R) throw Error(ErrorKind::SingularIterate, "initial anchor block is singular");
  return lu.inverse();
}

AnchorSet init_anchors(const Mat& B, const DetFitConfig& cfg) {
  const Index R = B.rows();
  if (!cfg.random_init) return spa(B, R);
  CounterRng rng(derive_seed(cfg.seed, {0x1417}));
  for (int attempt = 0; attempt < 100; ++attempt) {
    AnchorSet pick = sample_without_replacement(rng, B.cols(), R);
    Mat S(R, R);
    for (Index r = 0; r < R; ++r) S.col(r) = B.col(pick[static_cast<std::size_t>(r)]);
    if (Eigen::FullPivLU<Mat>(S).rank() == R) return pick;
  }
  throw Error(ErrorKind::SingularIterate, "no nonsingular random initial anchor block");
}

// Forces 1^T Z = a^T, then shrinks Z toward (1/R) 1 a^T until Z B >= 0.
Mat make_volmin_feasible(Mat Z, const Mat& B, const Vec& a) {
  const Index R = Z.rows();
  const Eigen::RowVectorXd colgap = a.transpose() - Z.colwise().sum();
  Z.rowwise() += colgap / static_cast<double>(R);
  const double hmin = (Z * B).minCoeff();
  if (hmin < 0.0) {
    const double kappa = (1.0 - static_cast<double>(R) * hmin) * (1.0 + 1e-9);
    Z = Z / kappa + ((1.0 - 1.0 / kappa) / static_cast<double>(R)) * Vec::Ones(R) * a.transpose();
  }
  return Z;
}

double neg_log_abs_det(const Mat& Z) {
  const double d = std::abs(Z.partialPivLu().determinant());
  if (!(d > 1e-300)) return std::numeric_limits<double>::infinity();
  return -std::log(d);
}

FactorPair volmin_factors(const VolMinData& d, const Mat& Z) {
  FactorPair out;
  Mat Hbar = (Z * d.B).transpose().cwiseMax(0.0);
  for (Index l = 0; l < Hbar.rows(); ++l) {
    const double s = Hbar.row(l).sum();
    if (s > 0.0) Hbar.row(l) /= s;
  }
  Hbar = d.norm.record.scales.asDiagonal() * Hbar;
  out.H = Mat::Zero(d.n_full, Z.rows());
  for (std::size_t k = 0; k < d.keep.size(); ++k) out.H.row(d.keep[k]) = Hbar.row(static_cast<Index>(k));
  out.W = d.emb.back_map * Z.inverse();
  out.nonneg_h = true;
  return out;
}

}  // namespace

// ----------------------------------------------------------------------- SCA

DetFitResult volmin_sca_fit(const Mat& X, const DetFitConfig& cfg) {
  const Index R = cfg.rank;
  const VolMinData d = prepare_volmin(X, R);
  const Index N = d.B.cols();
  Mat Z = make_volmin_feasible(anchor_inverse(d.B, init_anchors(d.B, cfg)), d.B, d.a);
  double f = neg_log_abs_det(Z);
  if (!std::isfinite(f)) throw Error(ErrorKind::SingularIterate, "|det Z| < 1e-300 at initialization");

  // QP in vec(Z) (column-major): 1^T Z = a^T and (Z B)(i, l) >= 0.
  const Index nv = R * R;
  Mat E = Mat::Zero(R, nv);
  for (Index k = 0; k < R; ++k) E.block(k, k * R, 1, R).setOnes();
  Mat G = Mat::Zero(R * N, nv);
  for (Index i = 0; i < R; ++i)
    for (Index l = 0; l < N; ++l)
      for (Index k = 0; k < R; ++k) G(i * N + l, k * R + i) = d.B(k, l);
  const Mat P = Mat::Identity(nv, nv);
  const Vec h0 = Vec::Zero(R * N);

  auto grad = [](const Mat& Zc) -> Mat { return -Zc.inverse().transpose(); };
  double gamma = cfg.gamma > 0.0 ? cfg.gamma : 1e-2 * grad(Z).norm();

  DetFitResult out;
  out.trace.push_back(f);
  for (int it = 1; it <= cfg.iters; ++it) {
    const Mat V = Z - grad(Z) / gamma;
    const auto qp = qp_dual_active_set(P, -Eigen::Map<const Vec>(V.data(), nv), E, d.a, G, h0);
    Mat Dir = Eigen::Map<const Mat>(qp.x.data(), R, R) - Z;
    Dir.rowwise() -= Dir.colwise().sum() / static_cast<double>(R);  // keep 1^T Z fixed exactly

    // Ratio test: largest theta in (0, 1] keeping Z B >= -kSlack. The slack
    // stops QP round-off on active constraints from pinning theta at 0.
    constexpr double kSlack = 1e-10;
    const Mat S = Z * d.B;
    const Mat DS = Dir * d.B;
    double theta = 1.0;
    for (Index i = 0; i < S.size(); ++i)
      if (DS.data()[i] < 0.0) theta = std::min(theta, std::max(S.data()[i] + kSlack, 0.0) / -DS.data()[i]);

    bool accepted = false, converged = false;
    for (int half = 0; half <= 20; ++half, theta *= 0.5) {
      const Mat Zn = Z + theta * Dir;
      const double fn = neg_log_abs_det(Zn);
      if (fn < f) {
        Z = Zn;
        accepted = true;
        const double dec = f - fn;
        f = fn;
        out.trace.push_back(f);
        converged = dec <= 1e-13 * std::max(1.0, std::abs(f));
        break;
      }
    }
    out.iterations = it;
    if (!accepted || converged) break;
  }
  if (std::abs(Z.partialPivLu().determinant()) < 1e-300)
    throw Error(ErrorKind::SingularIterate, "|det Z| < 1e-300");
  out.Z = Z;
  out.pair = volmin_factors(d, Z);
  return out;
}

// ----------------------------------------------------------------------- ALP

namespace {

[[noreturn]] void lp_failure(Index j, LpStatus s) {
  std::ostringstream os;
  os << "row " << j << " LP ended " << to_string(s);
  throw Error(ErrorKind::LpFailure, os.str());
}

// Maximizes |r^T z| over the LP's feasible set; returns false if both LPs are
// infeasible.
bool row_update(LpProblem& lp, const Vec& r, Index j, Vec& z, double& val) {
  lp.c = r;
  const auto up = lp_solve(lp);
  lp.c = -r;
  const auto dn = lp_solve(lp);
  if (up.status == LpStatus::Unbounded) lp_failure(j, up.status);
  if (dn.status == LpStatus::Unbounded) lp_failure(j, dn.status);
  if (up.status != LpStatus::Optimal && dn.status != LpStatus::Optimal) return false;
  const double vu = up.status == LpStatus::Optimal ? std::abs(r.dot(up.x)) : -1.0;
  const double vd = dn.status == LpStatus::Optimal ? std::abs(r.dot(dn.x)) : -1.0;
  if (vu >= vd) {
    z = up.x;
    val = vu;
  } else {
    z = dn.x;
    val = vd;
  }
  return true;
}

DetFitResult alp_colsum(const Mat& X, const DetFitConfig& cfg) {
  const Index R = cfg.rank;
  if (!(cfg.rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho must be > 0");
  const SubspaceEmbedding emb = reduce_dimension(X, R);
  const Mat& B = emb.B;
  const Index N = B.cols();
  const Vec b1 = B.rowwise().sum();

  // SPA on column-normalized data when it is nonnegative, raw otherwise.
  Mat Bs = B;
  if (X.minCoeff() >= 0.0) {
    for (Index l = 0; l < N; ++l) {
      const double s = X.col(l).lpNorm<1>();
      if (s > 0.0) Bs.col(l) /= s;
    }
  }
  Mat Z = anchor_inverse(B, init_anchors(Bs, cfg));
  for (Index j = 0; j < R; ++j) {
    const double s = Z.row(j).dot(b1);
    if (std::abs(s) > 0.0) Z.row(j) *= cfg.rho / s;
  }

  LpProblem lp;
  lp.G = B.transpose();
  lp.h = Vec::Zero(N);
  lp.E = b1.transpose();
  lp.f = Vec::Constant(1, cfg.rho);

  DetFitResult out;
  double det_abs = std::abs(Z.partialPivLu().determinant());
  out.trace.push_back(det_abs);
  for (int sweep = 1; sweep <= cfg.iters; ++sweep) {
    for (Index j = 0; j < R; ++j) {
      const Vec r = cofactor_row(Z, j);
      const Vec cur = Z.row(j).transpose();
      const bool cur_feasible =
          (B.transpose() * cur).minCoeff() >= -1e-9 && std::abs(cur.dot(b1) - cfg.rho) <= 1e-9 * cfg.rho;
      Vec z;
      double val = 0.0;
      if (!row_update(lp, r, j, z, val)) lp_failure(j, LpStatus::Infeasible);
      if (!cur_feasible || val >= std::abs(r.dot(cur))) Z.row(j) = z.transpose();
    }
    const double det_new = std::abs(Z.partialPivLu().determinant());
    out.trace.push_back(det_new);
    out.iterations = sweep;
    const double gain = det_new - det_abs;
    det_abs = det_new;
    if (sweep > 1 && gain <= 1e-10 * det_abs) break;
  }
  if (det_abs < 1e-300) throw Error(ErrorKind::SingularIterate, "|det Z| < 1e-300");
  out.Z = Z;
  Mat H = (Z * B).transpose().cwiseMax(0.0);
  for (Index r = 0; r < R; ++r) {
    const double s = H.col(r).sum();
    if (s > 0.0) H.col(r) *= cfg.rho / s;
  }
  out.pair.H = std::move(H);
  out.pair.W = emb.back_map * Z.inverse();
  out.pair.nonneg_h = true;
  return out;
}

DetFitResult alp_volmin(const Mat& X, const DetFitConfig& cfg) {
  const Index R = cfg.rank;
  const VolMinData d = prepare_volmin(X, R);
  const Index N = d.B.cols();
  Mat Z = make_volmin_feasible(anchor_inverse(d.B, init_anchors(d.B, cfg)), d.B, d.a);

  // Rows 0..R-2 are free; the last is a^T minus their sum, so
  // det Z = det [z_0; ...; z_{R-2}; a^T].
  auto full = [&](const Mat& Zf) {
    Mat M = Zf;
    M.row(R - 1) = d.a.transpose();
    return M;
  };
  LpProblem lp;
  lp.G.resize(2 * N, R);
  lp.G.topRows(N) = d.B.transpose();
  lp.G.bottomRows(N) = -d.B.transpose();
  lp.h = Vec::Zero(2 * N);
  lp.E.resize(0, R);
  lp.f.resize(0);

  DetFitResult out;
  double det_abs = std::abs(full(Z).partialPivLu().determinant());
  out.trace.push_back(det_abs);
  for (int sweep = 1; sweep <= cfg.iters && R > 1; ++sweep) {
    for (Index j = 0; j + 1 < R; ++j) {
      Eigen::RowVectorXd others = Eigen::RowVectorXd::Zero(N);
      for (Index k = 0; k + 1 < R; ++k)
        if (k != j) others += Z.row(k) * d.B;
      lp.h.tail(N) = -(Eigen::RowVectorXd::Ones(N) - others).transpose().cwiseMax(0.0);
      const Vec r = cofactor_row(full(Z), j);
      const Vec cur = Z.row(j).transpose();
      Vec z;
      double val = 0.0;
      if (!row_update(lp, r, j, z, val)) lp_failure(j, LpStatus::Infeasible);
      if (val >= std::abs(r.dot(cur))) Z.row(j) = z.transpose();
    }
    const double det_new = std::abs(full(Z).partialPivLu().determinant());
    out.trace.push_back(det_new);
    out.iterations = sweep;
    const double gain = det_new - det_abs;
    det_abs = det_new;
    if (sweep > 1 && gain <= 1e-10 * det_abs) break;
  }
  Z.row(R - 1) = d.a.transpose() - Z.topRows(R - 1).colwise().sum();
  if (std::abs(Z.partialPivLu().determinant()) < 1e-300)
    throw Error(ErrorKind::SingularIterate, "|det Z| < 1e-300");
  out.Z = Z;
  out.pair = volmin_factors(d, Z);
  return out;
}

}  // namespace

DetFitResult alp_fit(const Mat& X, const DetFitConfig& cfg) {
  return cfg.variant == DetVariant::ColSum ? alp_colsum(X, cfg) : alp_volmin(X, cfg);
}

// -------------------------------------------------------- regularized fitting

namespace {

Mat trace_weight(Index R) {
  return static_cast<double>(R) * Mat::Identity(R, R) - Mat::Ones(R, R);
}

double surrogate_value(const Mat& W, double eps, DetSurrogate s) {
  if (s == DetSurrogate::LogDet) return logdet_reg(W, eps).value;
  return (W * trace_weight(W.cols()) * W.transpose()).trace();
}

ProxFn row_simplex_prox(double radius) {
  return [radius](Mat& Y, double) {
    for (Index i = 0; i < Y.rows(); ++i) Y.row(i) = simplex_project(Y.row(i).transpose(), radius).transpose();
  };
}

}  // namespace

double minvol_objective(const Mat& X, const Mat& W, const Mat& H, double lam, double eps, DetSurrogate s) {
  const double fit = (X - W * H.transpose()).squaredNorm();
  return lam == 0.0 ? fit : fit + lam * surrogate_value(W, eps, s);
}

Mat minvol_grad_w(const Mat& X, const Mat& W, const Mat& H, double lam, double eps, DetSurrogate s) {
  Mat g = -2.0 * (X - W * H.transpose()) * H;
  if (lam != 0.0) {
    if (s == DetSurrogate::LogDet)
      g += lam * logdet_reg(W, eps).grad;
    else
      g += 2.0 * lam * W * trace_weight(W.cols());
  }
  return g;
}

DetFitResult minvol_reg_fit(const Mat& X, const DetFitConfig& cfg) {
  const Index R = cfg.rank;
  require_finite(X, "X");
  if (R < 1 || R > std::min(X.rows(), X.cols())) throw Error(ErrorKind::InvalidArgument, "rank out of range");

  // Simplex rows of H live on column-normalized data; all-zero columns are
  // dropped there and get zero rows back.
  const bool normalize = cfg.h_constraint == HConstraint::Simplex;
  const IndexList keep = nonzero_columns(X);
  if (static_cast<Index>(keep.size()) < R) throw Error(ErrorKind::RankDeficient, "fewer nonzero columns than rank");
  Normalized norm;
  if (normalize) norm = l1_normalize_columns(select_columns(X, keep));
  const Mat& Xw = normalize ? norm.Xbar : X;

  ProxFn prox_h;
  switch (cfg.h_constraint) {
    case HConstraint::Simplex: prox_h = prox_column_simplex(1.0); break;
    case HConstraint::ColSum: prox_h = row_simplex_prox(cfg.rho); break;
    case HConstraint::Nonneg: prox_h = prox_nonneg(); break;
  }
  const ProxFn prox_w = cfg.nonneg_w ? prox_nonneg() : ProxFn([](Mat&, double) {});

  Mat W, H;
  if (cfg.random_init) {
    FitConfig fc;
    fc.rank = R;
    fc.seed = cfg.seed;
    const FactorPair p0 = initial_pair(Xw, fc);
    W = p0.W;
    H = p0.H;
  } else {
    AnchorSet anchors;
    if (normalize) {
      anchors = spa(Xw, R);
    } else {
      anchors = spa(l1_normalize_columns(select_columns(X.cwiseAbs(), keep)).Xbar, R);
      for (Index& a : anchors) a = keep[static_cast<std::size_t>(a)];
    }
    W.resize(Xw.rows(), R);
    for (Index r = 0; r < R; ++r) W.col(r) = Xw.col(anchors[static_cast<std::size_t>(r)]);
    H = nnls(W, Xw).transpose();
  }
  AdmmState hs;
  hs.Y = H.transpose();
  if (!cfg.random_init) {
    prox_h(hs.Y, 1.0);
    H = hs.Y.transpose();
  }
  AdmmState ws;
  ws.Y = W.transpose();

  const double eps = cfg.eps > 0.0 ? cfg.eps : default_logdet_eps(W);
  const double lam = cfg.lam >= 0.0 ? cfg.lam : 2e-3 * Xw.squaredNorm();
  auto objective = [&](const Mat& Wc, const Mat& Hc) {
    return minvol_objective(Xw, Wc, Hc, lam, eps, cfg.surrogate);
  };

  DetFitResult out;
  double f = objective(W, H);
  out.trace.push_back(f);
  const Mat Xt = Xw.transpose();
  for (int it = 1; it <= cfg.iters; ++it) {
    // W-block: tangent majorizer of the log-det (or the exact trace term)
    // gives a quadratic lam * tr(W F W^T), folded into an augmented LS.
    if (lam > 0.0) {
      Mat F = cfg.surrogate == DetSurrogate::LogDet
                  ? Mat((W.transpose() * W + eps * Mat::Identity(R, R)).inverse())
                  : trace_weight(R);
      F = 0.5 * (F + F.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Mat> es(F);
      const Mat S = es.operatorSqrt();
      Mat A(H.rows() + R, R);
      A.topRows(H.rows()) = H;
      A.bottomRows(R) = std::sqrt(lam) * S;
      Mat Bm = Mat::Zero(H.rows() + R, Xw.rows());
      Bm.topRows(H.rows()) = Xt;
      constrained_ls_admm(A, Bm, prox_w, ws);
    } else {
      constrained_ls_admm(H, Xt, prox_w, ws);
    }
    Mat Wn = ws.Y.transpose();
    double fn = objective(Wn, H);
    if (fn <= f) {
      W = std::move(Wn);
      f = fn;
    } else {
      ws.Y = W.transpose();
    }

    constrained_ls_admm(W, Xw, prox_h, hs);
    Mat Hn = hs.Y.transpose();
    fn = objective(W, Hn);
    if (fn <= f) {
      H = std::move(Hn);
      f = fn;
    } else {
      hs.Y = H.transpose();
    }
    out.trace.push_back(f);
    out.iterations = it;
    if (stalled(out.trace, 1e-9, 10)) break;
  }
  out.pair.W = W;
  if (normalize) {
    const Mat Hs = norm.record.scales.asDiagonal() * H;
    out.pair.H = Mat::Zero(X.cols(), R);
    for (std::size_t k = 0; k < keep.size(); ++k) out.pair.H.row(keep[k]) = Hs.row(static_cast<Index>(k));
  } else {
    out.pair.H = H;
  }
  out.pair.nonneg_w = cfg.nonneg_w;
  out.pair.nonneg_h = true;
  return out;
}

}  // namespace nmfident

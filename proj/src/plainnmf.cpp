#include "nmfident/plainnmf.hpp"

#include "nmfident/matcore.hpp"
#include "nmfident/random.hpp"
#include "nmfident/sepnmf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nmfident {

namespace {

void check_config(const Mat& X, const FitConfig& cfg) {
  require_finite(X, "X");
  if (cfg.rank < 1 || cfg.rank > std::min(X.rows(), X.cols()))
    throw Error(ErrorKind::InvalidArgument, "rank must lie in [1, min(M, N)]");
  if (cfg.max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be >= 1");
  if (cfg.reg_w.mu < 0.0 || cfg.reg_h.mu < 0.0) throw Error(ErrorKind::InvalidArgument, "regularizer weight must be >= 0");
}

void require_nonneg(const Mat& X) {
  if (X.size() > 0 && X.minCoeff() < 0.0) throw Error(ErrorKind::NegativeInput, "X has negative entries");
}

double l1_weight(const Regularizer& r) { return r.kind == Regularizer::Kind::L1 ? r.mu : 0.0; }
double fro_weight(const Regularizer& r) { return r.kind == Regularizer::Kind::Fro ? r.mu : 0.0; }

// One HALS pass over the columns of F in X ~ G F^T, i.e. F <- argmin over each
// column with the rest fixed. XtG = X^T G (rows of F x R), GtG = G^T G.
void hals_block(Mat& F, const Mat& XtG, const Mat& GtG, const Regularizer& reg) {
  const double l1 = l1_weight(reg);
  const double fro = fro_weight(reg);
  for (Index r = 0; r < F.cols(); ++r) {
    const double den = std::max(GtG(r, r) + fro, 1e-16);
    Vec num = XtG.col(r) - F * GtG.col(r) + F.col(r) * GtG(r, r);
    if (l1 > 0.0) num.array() -= 0.5 * l1;
    F.col(r) = (num / den).cwiseMax(0.0);
  }
}

// A zero column of W makes the matching column of H irrelevant; moving it to
// the worst-fit data column with H column zero leaves the objective unchanged.
void reseed_dead_columns(const Mat& X, Mat& W, Mat& H) {
  for (Index r = 0; r < W.cols(); ++r) {
    if (W.col(r).squaredNorm() > 0.0 && H.col(r).squaredNorm() > 0.0) continue;
    const Mat Res = X - W * H.transpose();
    Index worst = 0;
    (Res.colwise().squaredNorm()).maxCoeff(&worst);
    const Vec c = Res.col(worst).cwiseMax(0.0);
    if (!(c.squaredNorm() > 0.0)) continue;
    W.col(r) = c;
    H.col(r).setZero();
  }
}

}  // namespace

double fit_objective(const Mat& X, const Mat& W, const Mat& H, const Regularizer& rw, const Regularizer& rh) {
  return (X - W * H.transpose()).squaredNorm() + rw.value(W) + rh.value(H);
}

bool stalled(const Trace& trace, double rel_tol, int window) {
  if (trace.empty()) return false;
  if (trace.back() == 0.0) return true;
  if (static_cast<int>(trace.size()) <= window) return false;
  const double old = trace[trace.size() - 1 - static_cast<std::size_t>(window)];
  return old - trace.back() <= rel_tol * std::abs(old);
}

FactorPair initial_pair(const Mat& X, const FitConfig& cfg) {
  const Index R = cfg.rank;
  FactorPair p;
  p.nonneg_w = p.nonneg_h = true;
  switch (cfg.init) {
    case InitKind::Random: {
      CounterRng rng(derive_seed(cfg.seed, {0x1a17}));
      p.W = uniform_matrix(rng, X.rows(), R);
      p.H = uniform_matrix(rng, X.cols(), R);
      const double xn = X.norm();
      const double pn = (p.W * p.H.transpose()).norm();
      if (xn > 0.0 && pn > 0.0) {
        const double s = std::sqrt(xn / pn);
        p.W *= s;
        p.H *= s;
      }
      break;
    }
    case InitKind::Spa: {
      const IndexList keep = nonzero_columns(X);
      AnchorSet anchors = spa(l1_normalize_columns(select_columns(X, keep)).Xbar, R);
      for (Index& a : anchors) a = keep[static_cast<std::size_t>(a)];
      p.W.resize(X.rows(), R);
      for (Index r = 0; r < R; ++r) p.W.col(r) = X.col(anchors[static_cast<std::size_t>(r)]);
      p.H = nnls(p.W, X).transpose();
      break;
    }
    case InitKind::Provided:
      p = cfg.provided;
      if (p.W.rows() != X.rows() || p.H.rows() != X.cols() || p.W.cols() != R || p.H.cols() != R)
        throw Error(ErrorKind::ShapeMismatch, "provided factors do not match X and rank");
      if (p.W.minCoeff() < 0.0 || p.H.minCoeff() < 0.0)
        throw Error(ErrorKind::NegativeInput, "provided factors have negative entries");
      p.nonneg_w = p.nonneg_h = true;
      break;
  }
  return p;
}

FitResult hals_fit(const Mat& X, const FitConfig& cfg) {
  check_config(X, cfg);
  require_nonneg(X);
  FactorPair p = initial_pair(X, cfg);
  FitResult out;
  out.trace.push_back(fit_objective(X, p.W, p.H, cfg.reg_w, cfg.reg_h));
  const Mat Xt = X.transpose();
  for (int it = 1; it <= cfg.max_iters; ++it) {
    reseed_dead_columns(X, p.W, p.H);
    hals_block(p.H, Xt * p.W, p.W.transpose() * p.W, cfg.reg_h);
    hals_block(p.W, X * p.H, p.H.transpose() * p.H, cfg.reg_w);
    out.trace.push_back(fit_objective(X, p.W, p.H, cfg.reg_w, cfg.reg_h));
    out.iterations = it;
    if (stalled(out.trace, cfg.rel_tol, cfg.tol_window)) break;
  }
  out.pair = std::move(p);
  return out;
}

FitResult mu_fit(const Mat& X, const FitConfig& cfg) {
  check_config(X, cfg);
  require_nonneg(X);
  constexpr double floor = 1e-16;
  FactorPair p = initial_pair(X, cfg);
  p.W = p.W.cwiseMax(floor);
  p.H = p.H.cwiseMax(floor);
  FitResult out;
  out.trace.push_back(fit_objective(X, p.W, p.H));
  for (int it = 1; it <= cfg.max_iters; ++it) {
    {
      const Mat num = X.transpose() * p.W;
      const Mat den = p.H * (p.W.transpose() * p.W);
      p.H = p.H.cwiseProduct(num).cwiseQuotient(den.cwiseMax(floor)).cwiseMax(floor);
    }
    {
      const Mat num = X * p.H;
      const Mat den = p.W * (p.H.transpose() * p.H);
      p.W = p.W.cwiseProduct(num).cwiseQuotient(den.cwiseMax(floor)).cwiseMax(floor);
    }
    out.trace.push_back(fit_objective(X, p.W, p.H));
    out.iterations = it;
    if (stalled(out.trace, cfg.rel_tol, cfg.tol_window)) break;
  }
  out.pair = std::move(p);
  return out;
}

FitResult bcd_exact_fit(const Mat& X, const FitConfig& cfg) {
  check_config(X, cfg);
  require_nonneg(X);
  FactorPair p = initial_pair(X, cfg);
  const ProxFn prox_w = prox_nonneg(cfg.reg_w);
  const ProxFn prox_h = prox_nonneg(cfg.reg_h);
  AdmmState ws, hs;
  ws.Y = p.W.transpose();
  hs.Y = p.H.transpose();
  const Mat Xt = X.transpose();
  auto objective = [&](const Mat& W, const Mat& H) { return fit_objective(X, W, H, cfg.reg_w, cfg.reg_h); };

  FitResult out;
  double f = objective(p.W, p.H);
  out.trace.push_back(f);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    constrained_ls_admm(p.H, Xt, prox_w, ws);
    Mat Wn = ws.Y.transpose();
    double fn = objective(Wn, p.H);
    if (fn <= f) {
      p.W = std::move(Wn);
      f = fn;
    } else {
      ws.Y = p.W.transpose();
    }
    constrained_ls_admm(p.W, X, prox_h, hs);
    Mat Hn = hs.Y.transpose();
    fn = objective(p.W, Hn);
    if (fn <= f) {
      p.H = std::move(Hn);
      f = fn;
    } else {
      hs.Y = p.H.transpose();
    }
    out.trace.push_back(f);
    out.iterations = it;
    if (stalled(out.trace, cfg.rel_tol, cfg.tol_window)) break;
  }
  out.pair = std::move(p);
  return out;
}

FitResult best_of_restarts(const Fitter& fit, const Mat& X, const FitConfig& cfg, int restarts) {
  if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "restarts must be >= 1");
  FitResult best;
  bool have = false;
  for (int k = 0; k < restarts; ++k) {
    FitConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {0x2e57, static_cast<std::uint64_t>(k)});
    FitResult r = fit(X, c);
    if (!have || r.trace.back() < best.trace.back()) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace nmfident

#pragma once

#include "nmfident/core.hpp"

#include <cstdint>
#include <vector>

namespace nmfident {

/// B (R x N) with B^T = top-R eigenvectors * diag(sqrt(lambda)), so that
/// B^T B is the best rank-R PSD approximation of X. Eigenvalues in
/// [-1e-8 * max|lambda|, 0) are clipped to 0.
/// Throws NotSymmetric, or RankDeficient if a top-R eigenvalue is more
/// negative than that (or X = 0).
Mat psd_sqrt(const Mat& X, Index R);

struct SymNmfResult {
  Mat W;  // N x R, nonnegative
  Mat G;  // R x R, orthogonal
  Trace trace;  // ||B - W G||_F^2 after every W update
  double max_orth_error = 0.0;  // max over iterates of ||G G^T - I||_max
  int iterations = 0;
};

/// X ~ W W^T with W >= 0 by alternating G <- U V^T (svd of W^T B^T) and
/// W <- max(B^T G^T, 0), B = psd_sqrt(X, R). W starts uniform(0,1), scaled
/// to the norm of B. With restarts > 1 the run with the smallest final
/// objective is kept; seeds are derived from `seed`.
SymNmfResult symnmf_procrustes(const Mat& X, Index R, int iters = 1000, std::uint64_t seed = 0,
                               int restarts = 1);

/// X ~ C E C^T with C column-stochastic.
struct TriFactor {
  Mat C;  // M x R
  Mat E;  // R x R
  Trace trace;  // regularized mode: objective per outer iteration
  int iterations = 0;
};

enum class TriMode { ExactSubspace, Regularized };

/// ExactSubspace: B = psd_sqrt(X, R), then alp_fit (column-sum variant,
/// rho = 1) on B = G C^T; G is refit by least squares on the recovered C and
/// E = G^T G. Needs X PSD of rank R.
/// Regularized: block projected gradient on ||X - C E C^T||_F^2 + lam |det E|
/// from an anchor-based start, E unconstrained.
TriFactor trifactor_fit(const Mat& X, Index R, TriMode mode = TriMode::ExactSubspace, double lam = 0.0,
                        int iters = 2000);

struct HmmEstimate {
  Mat M_emit;      // M x R, column-stochastic
  Mat Theta;       // R x R, nonnegative, sums to 1
  Mat Transition;  // row-normalized Theta
  Trace trace;
  int iterations = 0;
};

/// min ||Omega - M Theta M^T||_F^2 + lam |det Theta| over column-stochastic M
/// and Theta on the simplex of R x R matrices, by block projected gradient
/// with backtracking on the exact objective. Omega is rescaled to sum 1.
/// M starts from SPA anchors of Omega, Theta from a sticky chain (0.5 on the
/// diagonal, the rest of each row uniform at random) with uniform state
/// weights. lam < 0 selects 0.1 ||Omega||_F. For lam > 0 a second run fits
/// with lam = 0 first and then adds the term; the lower final objective wins.
/// Throws DegenerateTheta if a row of Theta sums below 1e-12.
HmmEstimate hmm_estimate(const Mat& Omega, Index R, double lam = -1.0, int iters = 20000, std::uint64_t seed = 0);

/// Omega(i, j) = share of consecutive pairs (y_t, y_{t+1}) equal to (i, j).
/// Throws InvalidArgument for fewer than two tokens or a token outside [0, M).
Mat cooccurrence(const std::vector<int>& tokens, Index M);

}  // namespace nmfident

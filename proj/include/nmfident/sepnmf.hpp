#pragma once

#include "nmfident/core.hpp"

#include <limits>

namespace nmfident {

/// Ordered column indices of X picked as anchors.
using AnchorSet = IndexList;

struct GreedyResult {
  AnchorSet anchors;
  Mat residual;  // columns projected onto the complement of the picked ones
};

/// Successive projection: pick argmax_l ||r_l||_q, project every column onto
/// the orthogonal complement of the pick, repeat R times. Smallest index wins
/// ties. q = infinity is spelled std::numeric_limits<double>::infinity().
/// Throws RankDeficient if the residual collapses before R picks.
GreedyResult spa_detailed(const Mat& X, Index R, double q = 2.0);
AnchorSet spa(const Mat& X, Index R, double q = 2.0);

/// Greedy matching pursuit over the self-dictionary: pick
/// argmax_l ||R^T r_l||_inf with the same deflation as spa.
AnchorSet sd_somp(const Mat& X, Index R);

struct SelfDictResult {
  Mat C;  // N x N, columns on the unit simplex
  AnchorSet anchors;
  Trace trace;
  int iterations = 0;
};

/// min ||X - X C||_F^2 + lam * sum_m ||C(m,:)||_inf, columns of C on the
/// simplex, by monotone FISTA whose prox step is an inner ADMM split between
/// the row-infinity prox and the column simplex projection.
/// lam <= 0 selects the default 0.1 ||X||_F^2 / N.
SelfDictResult self_dict_fit(const Mat& X, Index R, double lam = -1.0, int iters = 500);

/// Ranks rows of C by infinity norm and keeps R of them, skipping a candidate
/// whose data column has cosine > 0.999 with an already kept one.
AnchorSet anchors_from_coefficients(const Mat& X, const Mat& C, Index R);

/// Reduces X to R dimensions, fits the minimum-volume centred ellipsoid, and
/// returns the R most active columns. Throws DegenerateSpan.
AnchorSet ellipsoid_rounding(const Mat& X, Index R);

enum class SeparableMethod { Spa, SdSomp, SelfDict, Er };

/// Column-normalizes X, finds anchors with `method`, then W = X(:, anchors)
/// in original units and H = nnls(W, X)^T.
FactorPair separable_factor(const Mat& X, Index R, SeparableMethod method, AnchorSet* anchors_out = nullptr);

}  // namespace nmfident

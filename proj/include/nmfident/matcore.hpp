#pragma once

#include "nmfident/core.hpp"

namespace nmfident {

/// Positive l1 norms of the original columns; Xbar(:, l) * scales(l) == X(:, l).
struct NormalizationRecord {
  Vec scales;
  bool input_nonnegative = true;
};

struct Normalized {
  Mat Xbar;
  NormalizationRecord record;
};

/// Scales every column of X to unit l1 norm.
///
/// Row-stochasticity of the implied right factor is only guaranteed when the
/// left factor is nonnegative; a warning is emitted for inputs with negative
/// entries. Throws ZeroColumn for a column with zero l1 norm.
Normalized l1_normalize_columns(const Mat& X);

/// Indices of the columns of X with nonzero l1 norm.
IndexList nonzero_columns(const Mat& X);
/// X(:, cols).
Mat select_columns(const Mat& X, const IndexList& cols);

/// Undoes l1_normalize_columns on a matrix whose columns align with X's.
Mat denormalize_columns(const Mat& Xbar, const NormalizationRecord& rec);

struct MatchResult {
  double mse = 0.0;
  IndexList perm;  // column r of H_true matches column perm[r] of H_est
};

/// Permutation- and scale-invariant distance between two factor matrices.
///
/// Columns are l2-normalized first, then the column permutation minimizing
/// the summed squared distance is found (exhaustively for R <= 8, Hungarian
/// assignment above that). mse = (1/R) * sum_r ||hbar_r - hhat_perm(r)||^2.
MatchResult match_and_mse(const Mat& H_true, const Mat& H_est);

/// Minimum-cost assignment on a square cost matrix (Hungarian method).
/// Returns assignment[r] = column matched to row r.
IndexList hungarian(const Mat& cost);

/// Minimum-cost assignment by enumerating permutations (small sizes only).
IndexList exhaustive_assignment(const Mat& cost);

struct LogDetValue {
  double value = 0.0;
  Mat grad;
};

/// log det(W^T W + eps I) and its gradient 2 W (W^T W + eps I)^{-1}.
LogDetValue logdet_reg(const Mat& W, double eps);

/// Default guard 1e-8 * trace(W^T W) / R (falls back to 1e-8 for W = 0).
double default_logdet_eps(const Mat& W);

/// ||X - W H^T||_F / ||X||_F. Throws ZeroMatrix when ||X||_F = 0.
double residual_rel(const Mat& X, const FactorPair& pair);

/// Total-variation distance (1/(2R)) ||A - B P||_1 after the column
/// permutation P that minimizes the l1 distance.
double tv_distance_matched(const Mat& A, const Mat& B);

}  // namespace nmfident

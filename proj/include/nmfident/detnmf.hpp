#pragma once

#include "nmfident/core.hpp"

#include <cstdint>

namespace nmfident {

/// X ~ back_map * B with back_map the top-R left singular vectors.
struct SubspaceEmbedding {
  Mat B;         // R x N
  Mat back_map;  // M x R, orthonormal columns
  double energy_kept = 1.0;
  Vec singular_values;  // all of them, descending
};

/// Projects X onto its top-R left singular subspace.
/// Throws RankDeficient when sigma_R / sigma_1 <= 1e-10.
SubspaceEmbedding reduce_dimension(const Mat& X, Index R);

enum class DetVariant { VolMin, ColSum };
enum class DetSurrogate { LogDet, Trace };
enum class HConstraint { Simplex, ColSum, Nonneg };

struct DetFitConfig {
  Index rank = 0;
  DetVariant variant = DetVariant::VolMin;
  double rho = 1.0;       // column sum of H for the colsum variant
  double lam = -1.0;      // regularized fitting weight; < 0 selects 2e-3 ||X||_F^2 (X normalized if H rows are simplex)
  double eps = -1.0;      // logdet guard; <= 0 selects 1e-8 trace(W^T W)/R
  double gamma = -1.0;    // SCA proximal weight; <= 0 selects 1e-2 ||grad f(Z0)||_F
  int iters = 500;
  std::uint64_t seed = 0;
  bool random_init = false;  // default init is SPA
  DetSurrogate surrogate = DetSurrogate::LogDet;
  bool nonneg_w = true;      // regularized fitting only
  HConstraint h_constraint = HConstraint::Simplex;  // regularized fitting only
};

struct DetFitResult {
  FactorPair pair;
  Trace trace;  // -log|det Z| (SCA), |det Z| per sweep (ALP), composite objective (reg)
  Mat Z;        // R x R inverse of the reduced left factor (SCA/ALP)
  int iterations = 0;
};

/// VolMin on column-normalized data: min -log|det Z| s.t. 1^T Z = a, Z B >= 0
/// in the reduced space, by successive convex approximation. Every iterate is
/// kept exactly feasible by a ratio test and the step is halved (up to 20
/// times) until the objective decreases.
DetFitResult volmin_sca_fit(const Mat& X, const DetFitConfig& cfg);

/// Determinant maximization by alternating linear programming: each row z_j
/// of Z maximizes |r_j^T z_j| (r_j the cofactor vector) over its feasible set,
/// solving the two LPs with objectives +-r_j. variant ColSum enforces
/// Z B >= 0, z_j^T (B 1) = rho; variant VolMin works on column-normalized data
/// with 1^T Z = a. Stops when |det Z| improves by less than 1e-10 (relative)
/// over a sweep. trace[0] is the starting point, which need not be feasible;
/// from trace[1] on the trace is non-decreasing.
DetFitResult alp_fit(const Mat& X, const DetFitConfig& cfg);

/// Regularized fitting ||X - W H^T||_F^2 + lam * g(W), with g the log-det
/// surrogate (majorized by its tangent at every outer step) or the trace
/// surrogate trace(W F W^T), F = R I - 1 1^T. Both blocks are solved by ADMM.
DetFitResult minvol_reg_fit(const Mat& X, const DetFitConfig& cfg);

/// Composite objective of minvol_reg_fit (log-det or trace surrogate).
double minvol_objective(const Mat& X, const Mat& W, const Mat& H, double lam, double eps, DetSurrogate s);
/// Gradient of minvol_objective with respect to W.
Mat minvol_grad_w(const Mat& X, const Mat& W, const Mat& H, double lam, double eps, DetSurrogate s);

/// Cofactor vector of row j: det Z = cofactors(Z, j).dot(Z.row(j)).
Vec cofactor_row(const Mat& Z, Index j);

}  // namespace nmfident

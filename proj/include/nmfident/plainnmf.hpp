#pragma once

#include "nmfident/convexkit.hpp"
#include "nmfident/core.hpp"

#include <cstdint>
#include <functional>

namespace nmfident {

enum class InitKind { Random, Spa, Provided };

struct FitConfig {
  Index rank = 0;
  int max_iters = 2000;
  double rel_tol = 1e-9;  // relative objective decrease over `tol_window` sweeps
  int tol_window = 10;
  Regularizer reg_w;
  Regularizer reg_h;
  InitKind init = InitKind::Random;
  std::uint64_t seed = 0;
  FactorPair provided;
};

struct FitResult {
  FactorPair pair;
  Trace trace;  // objective after every sweep, trace[0] at the initial point
  int iterations = 0;
};

/// ||X - W H^T||_F^2 + reg_w(W) + reg_h(H).
double fit_objective(const Mat& X, const Mat& W, const Mat& H, const Regularizer& rw = {},
                     const Regularizer& rh = {});

/// Starting point per cfg.init. Random draws uniform(0,1) factors from
/// cfg.seed and rescales them so ||W H^T||_F = ||X||_F.
FactorPair initial_pair(const Mat& X, const FitConfig& cfg);

/// True once the relative decrease over the last `window` entries of `trace`
/// falls below rel_tol.
bool stalled(const Trace& trace, double rel_tol, int window);

/// Hierarchical ALS: exact nonnegative update of one column of W or H at a
/// time. Dead columns are reseeded from the worst-fit data column.
/// Throws NegativeInput for X with negative entries.
FitResult hals_fit(const Mat& X, const FitConfig& cfg);

/// Frobenius multiplicative updates with factors clamped below at 1e-16.
/// Regularizers are ignored.
FitResult mu_fit(const Mat& X, const FitConfig& cfg);

/// Exact block coordinate descent: each block is solved to KKT tolerance
/// 1e-6 by ADMM (warm-started across sweeps).
FitResult bcd_exact_fit(const Mat& X, const FitConfig& cfg);

using Fitter = std::function<FitResult(const Mat&, const FitConfig&)>;

/// Runs `fit` from `restarts` random starts (seeds derived from cfg.seed) and
/// keeps the run with the smallest final objective.
FitResult best_of_restarts(const Fitter& fit, const Mat& X, const FitConfig& cfg, int restarts);

}  // namespace nmfident

#pragma once

#include "nmfident/core.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace nmfident {

struct PlantedInstance {
  Mat X;
  Mat W;
  Mat H;
  IndexList anchors;  // gen_separable only
};

/// Synthetic factor pair of one of the three benchmark cases:
///   1: W uniform(0,1) with exactly round(s*M*R) nonzeros
///   2: W uniform(0,1), dense
///   3: W standard Gaussian
/// H is uniform(0,1) with exactly round(s*N*R) nonzeros in every case and
/// X = W H^T. The default s = 0.65.
PlantedInstance gen_table2_case(int which, Index M, Index N, Index R, double s, std::uint64_t seed);

/// W uniform(0,1); rows 0..R-1 of H form the identity and the remaining rows
/// are uniform on the simplex. A finite snr_db adds Gaussian noise with
/// ||noise||_F = ||X||_F * 10^(-snr/20) (in expectation), then clips at 0.
PlantedInstance gen_separable(Index M, Index N, Index R, double snr_db, std::uint64_t seed);

/// Adds i.i.d. Gaussian noise scaled to `snr_db` relative to ||X||_F.
Mat add_noise_snr(const Mat& X, double snr_db, std::uint64_t seed, bool clip_at_zero);

/// M x R factor with exponential(1) entries and one zero per row at a random
/// position, redrawn until check_ssc certifies it sufficiently scattered
/// (after scaling columns to sum 1 when `column_stochastic`). Needs M >= R(R-1).
/// Throws MaxIterations after 1000 draws.
Mat gen_scattered_factor(Index M, Index R, bool column_stochastic, std::uint64_t seed);

struct HmmInstance {
  std::vector<int> tokens;
  Mat emission;    // M x R, column-stochastic
  Mat transition;  // R x R, row-stochastic
  Mat theta;       // R x R joint of consecutive hidden states, sums to 1
  Vec stationary;
};

/// Emission and transition entries exponential(1); zeros_frac of the emission
/// entries are zeroed at uniformly random positions before normalization.
/// The chain starts from its stationary law. Throws DegenerateEmission when an
/// emission column ends up all zero.
HmmInstance gen_hmm(Index M, Index R, double zeros_frac, Index length, std::uint64_t seed);

/// Stationary distribution of a row-stochastic matrix.
Vec stationary_distribution(const Mat& T);

}  // namespace nmfident

#pragma once

#include "nmfident/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace nmfident {

enum class SscVerdict { Scattered, NotScattered, Inconclusive };
const char* to_string(SscVerdict v) noexcept;

/// Evidence about max ||x||^2 s.t. H x >= 0, 1^T x = 1.
///
/// The maximum is 1, attained only at coordinate vectors, exactly when H is
/// sufficiently scattered. The regularity half of the definition is not
/// checked separately: it is assumed whenever the vertex evidence is strict,
/// and `regularity_assumed` records that.
struct SscCertificate {
  SscVerdict verdict = SscVerdict::Inconclusive;
  Vec witness;  // feasible point with the largest norm found
  double witness_norm = 0.0;  // ||witness||^2
  int restarts_used = 0;
  bool regularity_assumed = false;
  std::vector<Trace> linearization;  // x(t)^T x(t+1) per chain from its first LP vertex on (check_ssc only)
};

/// Successive linearization: each restart repeatedly solves
/// max x(t)^T x over the feasible set by LP. The first R restarts begin near
/// the coordinate vectors, the rest at uniform simplex points; restarts <= 0
/// selects 5R. A chain stalling at an off-coordinate vertex of norm <= 1 is
/// continued from the coordinate direction of its largest entry. A restart
/// ending at e_r is followed by LPs over the face x_r = 1, which catches ties
/// hiding a longer vertex.
/// Throws NegativeInput for H with negative entries.
SscCertificate check_ssc(const Mat& H, int restarts = 0, std::uint64_t seed = 0);

/// Exact answer by enumerating every vertex and extreme ray of the feasible
/// set. Throws TooLarge unless R <= 4 and N <= 12.
SscCertificate ssc_oracle_small(const Mat& H);

struct TransitionRow {
  Index R = 0;
  double density = 0.0;
  double failure_frequency = 0.0;  // share of trials not certified scattered
};

/// For every (R, density): H is N x R with exponential(1) entries, exactly
/// round(density * N * R) of them kept, then check_ssc. Trials run on
/// `threads` workers (0 = hardware concurrency); trial seeds depend only on
/// (seed, R, density index, trial), so the table does not depend on threads.
std::vector<TransitionRow> transition_experiment(Index N, const std::vector<Index>& R_grid,
                                                 const std::vector<double>& density_grid, int trials,
                                                 std::uint64_t seed, unsigned threads = 0);

/// Header "R,density,failure_frequency", one line per row.
void write_transition_csv(std::ostream& out, const std::vector<TransitionRow>& rows);

}  // namespace nmfident

#include "nmfident/geomcheck.hpp"

#include "nmfident/convexkit.hpp"
#include "nmfident/io.hpp"
#include "nmfident/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace nmfident {

const char* to_string(SscVerdict v) noexcept {
  switch (v) {
    case SscVerdict::Scattered: return "scattered";
    case SscVerdict::NotScattered: return "not_scattered";
    case SscVerdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

constexpr double kNormTol = 1e-9;
constexpr double kCoordTol = 1e-6;

void require_nonneg(const Mat& H) {
  require_finite(H, "H");
  if (H.rows() < 1 || H.cols() < 1) throw Error(ErrorKind::InvalidArgument, "H must be nonempty");
  if (H.minCoeff() < 0.0) throw Error(ErrorKind::NegativeInput, "H must be nonnegative");
}

/// Index r with ||x - e_r|| <= kCoordTol, or -1.
Index coordinate_of(const Vec& x) {
  for (Index r = 0; r < x.size(); ++r) {
    Vec d = x;
    d(r) -= 1.0;
    if (d.norm() <= kCoordTol) return r;
  }
  return -1;
}

LpProblem feasible_set(const Mat& H) {
  LpProblem p;
  const Index R = H.cols();
  p.E = Mat::Ones(1, R);
  p.f = Vec::Ones(1);
  p.G = H;
  p.h = Vec::Zero(H.rows());
  return p;
}

/// A feasible point on the ray x + t d with ||.||^2 >= 2 and off the coordinates.
Vec far_point(const Vec& x, const Vec& d) {
  double t = 1.0;
  Vec y = x + t * d;
  while (y.squaredNorm() < 2.0 || coordinate_of(y) >= 0) {
    t *= 2.0;
    y = x + t * d;
  }
  return y;
}

struct Tracker {
  SscCertificate cert;
  bool off_coordinate_unresolved = false;
  bool failed = false;

  void offer(const Vec& x) {
    const double n = x.squaredNorm();
    if (cert.witness.size() == 0 || n > cert.witness_norm) {
      cert.witness = x;
      cert.witness_norm = n;
    }
  }
  bool found_long() const {
    return cert.witness.size() > 0 && cert.witness_norm > 1.0 + kNormTol && coordinate_of(cert.witness) < 0;
  }
};

/// LPs max x_j over the face x_r = 1. Returns false if the face is larger
/// than {e_r}; the longer point goes to the tracker.
bool face_is_point(const Mat& H, Index r, Tracker& t) {
  const Index R = H.cols();
  LpProblem p = feasible_set(H);
  p.E.conservativeResize(2, R);
  p.E.row(1) = Vec::Unit(R, r).transpose();
  p.f = Vec::Ones(2);
  for (Index j = 0; j < R; ++j) {
    if (j == r) continue;
    p.c = Vec::Unit(R, j);
    const LpResult res = lp_solve(p);
    if (res.status == LpStatus::Unbounded) {
      t.offer(far_point(res.x, res.ray));
      return false;
    }
    if (res.status != LpStatus::Optimal) {
      t.failed = true;
      return false;
    }
    t.offer(res.x);
    if (res.value > kNormTol) return false;
  }
  return true;
}

}  // namespace

SscCertificate check_ssc(const Mat& H, int restarts, std::uint64_t seed) {
  require_nonneg(H);
  const Index R = H.cols();
  if (restarts <= 0) restarts = static_cast<int>(5 * R);
  Tracker t;
  t.offer(Vec::Unit(R, 0));
  std::vector<int> face_checked(static_cast<std::size_t>(R), -1);  // -1 unknown, 0 larger face, 1 point
  bool all_coordinate = true;
  LpProblem p = feasible_set(H);
  CounterRng rng(derive_seed(seed, {0x55c0}));

  for (int k = 0; k < restarts; ++k) {
    Vec x;
    if (k < R) {
      x = Vec::Unit(R, k) + 0.05 * gaussian_matrix(rng, R, 1).col(0);
    } else {
      x = uniform_simplex(rng, R);
    }
    Vec end;
    int escapes = 0;
    try {
      Trace lin;
      for (int it = 0; it < 200; ++it) {
        p.c = x;
        const LpResult res = lp_solve(p);
        if (res.status == LpStatus::Unbounded) {
          end = far_point(res.x, res.ray);
          break;
        }
        if (res.status != LpStatus::Optimal) throw Error(ErrorKind::LpFailure, "infeasible check LP");
        if (it > 0) lin.push_back(res.value);  // the start point is not feasible
        const bool moved = (res.x - x).norm() > 1e-12;
        const double gain = res.value - x.squaredNorm();
        x = res.x;
        end = x;
        if (!moved || (it > 0 && gain <= 1e-13 * std::max(1.0, res.value))) {
          // A short off-coordinate vertex is only a local maximum: continue
          // from the coordinate direction of its largest entry.
          if (coordinate_of(x) >= 0 || x.squaredNorm() > 1.0 + kNormTol || escapes >= R) break;
          ++escapes;
          Index k = 0;
          x.maxCoeff(&k);
          x = Vec::Unit(R, k);
          t.cert.linearization.push_back(std::move(lin));
          lin.clear();
          it = -1;
        }
      }
      t.cert.linearization.push_back(std::move(lin));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::LpFailure) throw;
      t.failed = true;
      all_coordinate = false;
    }
    ++t.cert.restarts_used;
    if (end.size() == 0) continue;
    t.offer(end);
    const Index r = coordinate_of(end);
    if (r < 0) {
      all_coordinate = false;
      if (end.squaredNorm() <= 1.0 + kNormTol) t.off_coordinate_unresolved = true;
    } else {
      auto& fc = face_checked[static_cast<std::size_t>(r)];
      if (fc < 0) {
        try {
          fc = face_is_point(H, r, t) ? 1 : 0;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::LpFailure) throw;
          t.failed = true;
          fc = 0;
        }
      }
      if (fc == 0) all_coordinate = false;
    }
    if (t.found_long()) break;
  }

  if (t.found_long()) {
    t.cert.verdict = SscVerdict::NotScattered;
  } else if (all_coordinate && !t.failed && !t.off_coordinate_unresolved) {
    t.cert.verdict = SscVerdict::Scattered;
    t.cert.regularity_assumed = true;
  } else {
    t.cert.verdict = SscVerdict::Inconclusive;
  }
  return t.cert;
}

namespace {

/// Calls f on every k-subset of [0, n).
template <class F>
void for_each_subset(Index n, Index k, F&& f) {
  IndexList idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return;
  while (true) {
    f(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

Mat active_system(const Mat& H, const IndexList& rows) {
  Mat A(static_cast<Index>(rows.size()) + 1, H.cols());
  A.row(0).setOnes();
  for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<Index>(i) + 1) = H.row(rows[i]);
  return A;
}

}  // namespace

SscCertificate ssc_oracle_small(const Mat& H) {
  require_nonneg(H);
  const Index N = H.rows(), R = H.cols();
  if (R > 4 || N > 12) throw Error(ErrorKind::TooLarge, "ssc_oracle_small needs R <= 4 and N <= 12");
  const double tol = 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff());
  SscCertificate c;
  c.restarts_used = 0;

  Mat full(N + 1, R);
  full << Mat::Ones(1, R), H;
  Eigen::FullPivLU<Mat> lu(full);
  lu.setThreshold(1e-12);
  if (lu.rank() < R) {
    // A line lies in the feasible set.
    const Vec d = lu.kernel().col(0);
    c.witness = far_point(Vec::Unit(R, 0), d / d.norm());
    c.witness_norm = c.witness.squaredNorm();
    c.verdict = SscVerdict::NotScattered;
    return c;
  }

  // Extreme rays of the recession cone {H d >= 0, 1^T d = 0}.
  bool unbounded = false;
  Vec ray;
  if (R >= 2) {
    for_each_subset(N, R - 2, [&](const IndexList& rows) {
      if (unbounded) return;
      Eigen::FullPivLU<Mat> l(active_system(H, rows));
      l.setThreshold(1e-12);
      if (l.rank() != R - 1) return;
      Vec d = l.kernel().col(0);
      d /= d.norm();
      for (double s : {1.0, -1.0}) {
        if (((s * H * d).array() >= -tol).all()) {
          unbounded = true;
          ray = s * d;
          return;
        }
      }
    });
  }
  if (unbounded) {
    c.witness = far_point(Vec::Unit(R, 0), ray);
    c.witness_norm = c.witness.squaredNorm();
    c.verdict = SscVerdict::NotScattered;
    return c;
  }

  bool boundary = false;
  c.witness = Vec::Unit(R, 0);
  c.witness_norm = 1.0;
  for_each_subset(N, R - 1, [&](const IndexList& rows) {
    const Mat A = active_system(H, rows);
    Eigen::FullPivLU<Mat> l(A);
    l.setThreshold(1e-12);
    if (l.rank() < R) return;
    const Vec x = l.solve(Vec::Unit(R, 0));
    if (((H * x).array() < -tol).any()) return;
    const double n = x.squaredNorm();
    if (coordinate_of(x) >= 0) return;
    if (n > 1.0 + kNormTol) {
      if (n > c.witness_norm) {
        c.witness = x;
        c.witness_norm = n;
      }
    } else if (n >= 1.0 - kNormTol) {
      boundary = true;
    }
  });
  if (c.witness_norm > 1.0 + kNormTol) {
    c.verdict = SscVerdict::NotScattered;
  } else if (boundary) {
    c.verdict = SscVerdict::Inconclusive;
  } else {
    c.verdict = SscVerdict::Scattered;
    c.regularity_assumed = true;
  }
  return c;
}

std::vector<TransitionRow> transition_experiment(Index N, const std::vector<Index>& R_grid,
                                                 const std::vector<double>& density_grid, int trials,
                                                 std::uint64_t seed, unsigned threads) {
  if (R_grid.empty() || density_grid.empty()) throw Error(ErrorKind::InvalidArgument, "grids must be nonempty");
  if (trials < 1 || N < 1) throw Error(ErrorKind::InvalidArgument, "need N >= 1 and trials >= 1");
  for (double d : density_grid)
    if (!(d > 0.0 && d <= 1.0)) throw Error(ErrorKind::InvalidArgument, "densities must lie in (0, 1]");
  for (Index R : R_grid)
    if (R < 1) throw Error(ErrorKind::InvalidArgument, "ranks must be positive");

  const std::size_t cells = R_grid.size() * density_grid.size();
  const std::size_t jobs = cells * static_cast<std::size_t>(trials);
  std::vector<char> failed(jobs, 0);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t cell = j / static_cast<std::size_t>(trials);
      const std::size_t trial = j % static_cast<std::size_t>(trials);
      const std::size_t ri = cell / density_grid.size(), di = cell % density_grid.size();
      const Index R = R_grid[ri];
      const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(R), di, trial});
      CounterRng rng(s);
      Mat H = exponential_matrix(rng, N, R);
      sparsify_exact(rng, H, density_grid[di]);
      failed[j] = check_ssc(H, 0, s).verdict != SscVerdict::Scattered;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::vector<TransitionRow> out;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    TransitionRow row;
    row.R = R_grid[cell / density_grid.size()];
    row.density = density_grid[cell % density_grid.size()];
    int f = 0;
    for (int k = 0; k < trials; ++k) f += failed[cell * static_cast<std::size_t>(trials) + static_cast<std::size_t>(k)];
    row.failure_frequency = static_cast<double>(f) / trials;
    out.push_back(row);
  }
  return out;
}

void write_transition_csv(std::ostream& out, const std::vector<TransitionRow>& rows) {
  out << "R,density,failure_frequency\n";
  for (const auto& r : rows)
    out << r.R << ',' << io::format_double(r.density) << ',' << io::format_double(r.failure_frequency) << '\n';
}

}  // namespace nmfident

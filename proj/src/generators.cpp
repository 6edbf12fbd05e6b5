#include "nmfident/generators.hpp"

#include "nmfident/geomcheck.hpp"
#include "nmfident/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nmfident {

PlantedInstance gen_table2_case(int which, Index M, Index N, Index R, double s, std::uint64_t seed) {
  if (which < 1 || which > 3) throw Error(ErrorKind::InvalidArgument, "case must be 1, 2 or 3");
  if (M < 1 || N < 1 || R < 1) throw Error(ErrorKind::InvalidArgument, "dimensions must be positive");
  CounterRng wr(derive_seed(seed, {0x7ab1, 1}));
  CounterRng hr(derive_seed(seed, {0x7ab1, 2}));
  PlantedInstance p;
  if (which == 3) {
    p.W = gaussian_matrix(wr, M, R);
  } else {
    p.W = uniform_matrix(wr, M, R);
    if (which == 1) sparsify_exact(wr, p.W, s);
  }
  p.H = uniform_matrix(hr, N, R);
  sparsify_exact(hr, p.H, s);
  p.X = p.W * p.H.transpose();
  return p;
}

Mat add_noise_snr(const Mat& X, double snr_db, std::uint64_t seed, bool clip_at_zero) {
  if (std::isinf(snr_db) && snr_db > 0.0) return X;
  CounterRng rng(derive_seed(seed, {0x5a12}));
  const double sigma = X.norm() / std::sqrt(static_cast<double>(std::max<Index>(X.size(), 1))) *
                       std::pow(10.0, -snr_db / 20.0);
  Mat out = X + sigma * gaussian_matrix(rng, X.rows(), X.cols());
  if (clip_at_zero) out = out.cwiseMax(0.0);
  return out;
}

PlantedInstance gen_separable(Index M, Index N, Index R, double snr_db, std::uint64_t seed) {
  if (N < R || M < 1 || R < 1) throw Error(ErrorKind::InvalidArgument, "gen_separable needs N >= R >= 1");
  CounterRng rng(derive_seed(seed, {0x5e9a}));
  PlantedInstance p;
  p.W = uniform_matrix(rng, M, R);
  p.H.resize(N, R);
  p.H.topRows(R).setIdentity();
  for (Index l = R; l < N; ++l) p.H.row(l) = uniform_simplex(rng, R).transpose();
  for (Index r = 0; r < R; ++r) p.anchors.push_back(r);
  p.X = add_noise_snr(p.W * p.H.transpose(), snr_db, seed, true);
  return p;
}

Mat gen_scattered_factor(Index M, Index R, bool column_stochastic, std::uint64_t seed) {
  if (R < 1 || M < R * (R - 1) || M < R)
    throw Error(ErrorKind::InvalidArgument, "gen_scattered_factor needs M >= R(R-1) and M >= R");
  for (std::uint64_t draw = 0; draw < 1000; ++draw) {
    CounterRng rng(derive_seed(seed, {0x5ca7, draw}));
    Mat W = exponential_matrix(rng, M, R);
    if (R > 1)
      for (Index i = 0; i < M; ++i) W(i, static_cast<Index>(rng.below(static_cast<std::uint64_t>(R)))) = 0.0;
    if (column_stochastic) {
      bool ok = true;
      for (Index r = 0; r < R; ++r) {
        const double s = W.col(r).sum();
        if (!(s > 0.0)) ok = false;
        else W.col(r) /= s;
      }
      if (!ok) continue;
    }
    if (check_ssc(W, 0, derive_seed(seed, {0x5ca8, draw})).verdict == SscVerdict::Scattered) return W;
  }
  throw Error(ErrorKind::MaxIterations, "no scattered factor in 1000 draws");
}

Vec stationary_distribution(const Mat& T) {
  const Index R = T.rows();
  Mat A = T.transpose() - Mat::Identity(R, R);
  A.row(R - 1).setOnes();
  Vec b = Vec::Zero(R);
  b(R - 1) = 1.0;
  Vec pi = A.fullPivLu().solve(b).cwiseMax(0.0);
  return pi / pi.sum();
}

namespace {

int draw_categorical(CounterRng& rng, const std::vector<double>& cdf) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

std::vector<double> cdf_of(const Vec& p) {
  std::vector<double> c(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) c[static_cast<std::size_t>(i)] = acc += p(i);
  return c;
}

}  // namespace

HmmInstance gen_hmm(Index M, Index R, double zeros_frac, Index length, std::uint64_t seed) {
  if (!(zeros_frac >= 0.0 && zeros_frac < 1.0)) throw Error(ErrorKind::InvalidArgument, "zeros_frac must lie in [0, 1)");
  if (M < 1 || R < 1 || length < 2) throw Error(ErrorKind::InvalidArgument, "gen_hmm needs M, R >= 1 and length >= 2");
  CounterRng rng(derive_seed(seed, {0x4a11}));
  HmmInstance h;
  h.transition = exponential_matrix(rng, R, R);
  for (Index i = 0; i < R; ++i) h.transition.row(i) /= h.transition.row(i).sum();
  h.emission = exponential_matrix(rng, M, R);
  if (zeros_frac > 0.0) sparsify_exact(rng, h.emission, 1.0 - zeros_frac);
  for (Index r = 0; r < R; ++r) {
    const double s = h.emission.col(r).sum();
    if (!(s > 0.0)) {
      std::ostringstream os;
      os << "emission column " << r << " is all zero";
      throw Error(ErrorKind::DegenerateEmission, os.str());
    }
    h.emission.col(r) /= s;
  }
  h.stationary = stationary_distribution(h.transition);
  h.theta = h.stationary.asDiagonal() * h.transition;

  std::vector<std::vector<double>> trans_cdf, emit_cdf;
  for (Index r = 0; r < R; ++r) {
    trans_cdf.push_back(cdf_of(h.transition.row(r).transpose()));
    emit_cdf.push_back(cdf_of(h.emission.col(r)));
  }
  const auto start_cdf = cdf_of(h.stationary);
  CounterRng chain(derive_seed(seed, {0x4a12}));
  h.tokens.resize(static_cast<std::size_t>(length));
  int state = draw_categorical(chain, start_cdf);
  for (Index t = 0; t < length; ++t) {
    h.tokens[static_cast<std::size_t>(t)] = draw_categorical(chain, emit_cdf[static_cast<std::size_t>(state)]);
    state = draw_categorical(chain, trans_cdf[static_cast<std::size_t>(state)]);
  }
  return h;
}

}  // namespace nmfident

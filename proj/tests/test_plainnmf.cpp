#include "doctest.h"

#include "nmfident/convexkit.hpp"
#include "nmfident/generators.hpp"
#include "nmfident/matcore.hpp"
#include "nmfident/plainnmf.hpp"
#include "nmfident/random.hpp"

using namespace nmfident;

namespace {

bool non_increasing(const Trace& t, double rel = 1e-12) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1] + rel * std::max(1.0, std::abs(t[i - 1]))) return false;
  return true;
}

FitConfig config(Index R, std::uint64_t seed) {
  FitConfig c;
  c.rank = R;
  c.seed = seed;
  return c;
}

Mat low_rank(Index M, Index N, Index R, std::uint64_t seed) {
  CounterRng rng(seed);
  return uniform_matrix(rng, M, R) * uniform_matrix(rng, N, R).transpose();
}

double sparsity(const Mat& H) { return static_cast<double>((H.array() < 1e-8).count()) / static_cast<double>(H.size()); }

}  // namespace

TEST_CASE("stalled detects a flat window") {
  CHECK_FALSE(stalled({}, 1e-9, 3));
  CHECK(stalled({5.0, 0.0}, 1e-9, 3));
  CHECK_FALSE(stalled({4.0, 3.0, 2.0}, 1e-9, 3));
  CHECK_FALSE(stalled({4.0, 3.0, 2.0, 1.0}, 1e-9, 3));
  CHECK(stalled({4.0, 1.0, 1.0, 1.0, 1.0}, 1e-9, 3));
}

TEST_CASE("random initialization matches the data scale") {
  const Mat X = 7.0 * low_rank(9, 12, 3, 1);
  const FactorPair p = initial_pair(X, config(3, 5));
  CHECK(std::abs((p.W * p.H.transpose()).norm() - X.norm()) <= 1e-12 * X.norm());
  CHECK(p.W.minCoeff() >= 0.0);
  const FactorPair q = initial_pair(X, config(3, 5));
  CHECK(p.W == q.W);
}

TEST_CASE("fitters reject negative data and bad ranks") {
  Mat X = low_rank(5, 6, 2, 2);
  X(0, 0) = -1.0;
  for (const Fitter& f : {Fitter(hals_fit), Fitter(mu_fit), Fitter(bcd_exact_fit)}) {
    try {
      f(X, config(2, 0));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NegativeInput);
    }
    CHECK_THROWS_AS(f(X.cwiseAbs(), config(7, 0)), Error);
  }
}

TEST_CASE("hals recovers the identity") {
  const Mat X = Mat::Identity(3, 3);
  const auto r = best_of_restarts(hals_fit, X, config(3, 0), 3);
  CHECK(residual_rel(X, r.pair) <= 1e-10);
  CHECK(match_and_mse(X, r.pair.H).mse <= 1e-20);
}

TEST_CASE("objective traces are non-increasing") {
  const Mat X = low_rank(20, 30, 4, 3) + 0.01 * low_rank(20, 30, 6, 4);
  FitConfig c = config(4, 7);
  c.max_iters = 300;
  CHECK(non_increasing(hals_fit(X, c).trace));
  CHECK(non_increasing(mu_fit(X, c).trace));
  CHECK(non_increasing(bcd_exact_fit(X, c).trace));
  c.reg_h = {Regularizer::Kind::L1, 0.5};
  c.reg_w = {Regularizer::Kind::Fro, 0.2};
  const auto h = hals_fit(X, c);
  CHECK(non_increasing(h.trace));
  CHECK(h.trace.back() == doctest::Approx(fit_objective(X, h.pair.W, h.pair.H, c.reg_w, c.reg_h)).epsilon(1e-12));
  CHECK(non_increasing(bcd_exact_fit(X, c).trace));
  c.init = InitKind::Spa;
  CHECK(non_increasing(hals_fit(X, c).trace));
}

TEST_CASE("factors stay nonnegative") {
  const Mat X = low_rank(10, 15, 3, 5);
  for (const Fitter& f : {Fitter(hals_fit), Fitter(mu_fit), Fitter(bcd_exact_fit)}) {
    const auto r = f(X, config(3, 2));
    CHECK(r.pair.W.minCoeff() >= 0.0);
    CHECK(r.pair.H.minCoeff() >= 0.0);
    r.pair.validate();
  }
}

TEST_CASE("multiplicative updates on zero and exact data") {
  FitConfig c = config(2, 1);
  c.max_iters = 500;
  const auto z = mu_fit(Mat::Zero(6, 5), c);
  CHECK(z.trace.back() <= 1e-20);

  const Mat X = low_rank(12, 10, 2, 6);
  c.rel_tol = 0.0;
  const auto r = mu_fit(X, c);
  CHECK(r.iterations == 500);
  CHECK(non_increasing(r.trace));
  CHECK(r.trace.back() < 1e-2 * r.trace.front());
}

TEST_CASE("hals needs no more sweeps than multiplicative updates") {
  const Mat X = low_rank(20, 25, 3, 8);
  FitConfig c = config(3, 4);
  c.max_iters = 20000;
  c.rel_tol = 0.0;
  // Run both to the same accuracy target.
  auto sweeps_to = [&](const Fitter& f) {
    for (int n = 50; n <= 20000; n *= 2) {
      c.max_iters = n;
      const auto r = f(X, c);
      if (residual_rel(X, r.pair) <= 1e-3) return n;
    }
    return -1;
  };
  const int h = sweeps_to(hals_fit);
  const int m = sweeps_to(mu_fit);
  REQUIRE(h > 0);
  REQUIRE(m > 0);
  CHECK(m >= h);
}

TEST_CASE("exact block update with W = I clips the data") {
  CounterRng rng(12);
  const Mat X = gaussian_matrix(rng, 5, 7);
  AdmmState s;
  AdmmOptions o;
  o.tol = 1e-12;
  o.max_iters = 5000;
  constrained_ls_admm(Mat::Identity(5, 5), X, prox_nonneg(), s, o);
  CHECK((s.Y - X.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("l1 weight on H increases sparsity") {
  const auto p = gen_table2_case(2, 20, 40, 3, 0.65, 3);
  double prev = -1.0;
  for (double mu : {0.0, 1.0, 4.0}) {
    FitConfig c = config(3, 1);
    c.reg_h = {Regularizer::Kind::L1, mu};
    c.max_iters = 400;
    const double s = sparsity(bcd_exact_fit(p.X, c).pair.H);
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(prev > 0.4);
}

TEST_CASE("exact block descent matches hals on case 1") {
  const auto p = gen_table2_case(1, 50, 200, 3, 0.65, 0);
  const auto h = best_of_restarts(hals_fit, p.X, config(3, 0), 5);
  const auto b = best_of_restarts(bcd_exact_fit, p.X, config(3, 0), 5);
  const double mh = match_and_mse(p.H, h.pair.H).mse;
  const double mb = match_and_mse(p.H, b.pair.H).mse;
  CHECK(mh <= 1e-3);
  CHECK(mb <= std::max(10.0 * mh, 1e-10));
}

TEST_CASE("best of restarts keeps the smallest objective") {
  const Mat X = low_rank(10, 12, 3, 9) + 0.05 * low_rank(10, 12, 5, 10);
  FitConfig c = config(3, 42);
  c.max_iters = 50;
  const auto best = best_of_restarts(hals_fit, X, c, 4);
  for (std::uint64_t k = 0; k < 4; ++k) {
    FitConfig ck = c;
    ck.seed = derive_seed(42, {0x2e57, k});
    CHECK(best.trace.back() <= hals_fit(X, ck).trace.back());
  }
}

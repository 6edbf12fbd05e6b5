#include "doctest.h"
#include "oracles.hpp"

#include "nmfident/convexkit.hpp"
#include "nmfident/random.hpp"

using namespace nmfident;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Projected gradient on the simplex with a bisection-based projection, kept
// independent of simplex_project.
Vec simplex_pg_oracle(const Vec& a) {
  auto proj = [](const Vec& v) {
    double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      ((v.array() - mid).max(0.0).sum() > 1.0 ? lo : hi) = mid;
    }
    return Vec((v.array() - 0.5 * (lo + hi)).max(0.0));
  };
  Vec x = Vec::Constant(a.size(), 1.0 / static_cast<double>(a.size()));
  for (int it = 0; it < 200; ++it) x = proj(x - 0.5 * (2.0 * (x - a)));
  return x;
}

}  // namespace

TEST_CASE("simplex projection examples") {
  CHECK(simplex_project(vec({0.5, 0.5})).isApprox(vec({0.5, 0.5})));
  CHECK(simplex_project(vec({2, 0})).isApprox(vec({1, 0})));
  const Vec p = simplex_project(vec({0.8, 0.4}));
  CHECK((p - vec({0.7, 0.3})).norm() < 1e-15);
  CHECK((p - simplex_pg_oracle(vec({0.8, 0.4}))).norm() < 1e-12);
}

TEST_CASE("simplex projection is idempotent and 1-Lipschitz") {
  CounterRng rng(17);
  for (int t = 0; t < 200; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(8));
    Vec a(n), b(n);
    for (Index i = 0; i < n; ++i) {
      a(i) = 3.0 * rng.normal();
      b(i) = 3.0 * rng.normal();
    }
    const Vec pa = simplex_project(a), pb = simplex_project(b);
    CHECK(std::abs(pa.sum() - 1.0) <= 1e-12);
    CHECK(pa.minCoeff() >= 0.0);
    CHECK((simplex_project(pa) - pa).norm() <= 1e-14);
    CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
    CHECK((pa - simplex_pg_oracle(a)).norm() < 1e-8);
  }
}

TEST_CASE("prox of the row infinity norm") {
  CounterRng rng(5);
  const Mat V = gaussian_matrix(rng, 4, 5);
  CHECK(prox_row_inf(V, 0.0) == V);
  Mat r(1, 2);
  r << 3, 0;
  const Mat p = prox_row_inf(r, 1.0);
  CHECK(p(0, 0) == doctest::Approx(2.0));
  CHECK(p(0, 1) == doctest::Approx(0.0));
  Mat small(1, 3);
  small << 0.2, -0.3, 0.1;
  CHECK(prox_row_inf(small, 1.0).norm() == 0.0);

  // Optimality: (V - P)/lam lies in the l1 unit ball and attains <., P> = ||P||_inf.
  for (double lam : {0.1, 0.7, 2.0}) {
    const Mat P = prox_row_inf(V, lam);
    for (Index i = 0; i < V.rows(); ++i) {
      const Vec g = (V.row(i) - P.row(i)).transpose() / lam;
      CHECK(g.lpNorm<1>() <= 1.0 + 1e-12);
      const Vec pr = P.row(i).transpose();
      CHECK(g.dot(pr) == doctest::Approx(pr.lpNorm<Eigen::Infinity>()).epsilon(1e-10));
    }
  }
}

TEST_CASE("nnls examples") {
  Mat A = Mat::Identity(2, 2);
  Mat B(2, 1);
  B << 1, -1;
  const Mat X = nnls(A, B);
  CHECK(X(0, 0) == doctest::Approx(1.0));
  CHECK(X(1, 0) == 0.0);

  Mat A2(2, 1);
  A2 << 1, 1;
  Mat B2(2, 1);
  B2 << 2, 2;
  CHECK(nnls(A2, B2)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("nnls recovers a nonnegative generator") {
  CounterRng rng(23);
  for (int t = 0; t < 20; ++t) {
    const Mat A = uniform_matrix(rng, 8, 3);
    Mat X0 = uniform_matrix(rng, 3, 6);
    sparsify_exact(rng, X0, 0.6);
    const auto res = nnls_solve(A, A * X0);
    CHECK((res.X - X0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(res.X.minCoeff() >= 0.0);
  }
}

TEST_CASE("nnls KKT conditions on inconsistent data") {
  CounterRng rng(29);
  for (int t = 0; t < 20; ++t) {
    const Mat A = gaussian_matrix(rng, 10, 4);
    const Mat B = gaussian_matrix(rng, 10, 3);
    const auto res = nnls_solve(A, B);
    const Mat grad = A.transpose() * (A * res.X - B);
    CHECK(res.X.minCoeff() >= 0.0);
    CHECK(grad.minCoeff() >= -1e-8);
    CHECK(std::abs(res.X.cwiseProduct(grad).sum()) <= 1e-8);
  }
}

TEST_CASE("lp small cases") {
  LpProblem p;
  p.c = vec({1, 1});
  p.G.resize(4, 2);
  p.G << -1, 0, 0, -1, 1, 0, 0, 1;
  p.h = vec({-1, -1, 0, 0});
  auto r = lp_solve(p);
  CHECK(r.status == LpStatus::Optimal);
  CHECK(r.value == doctest::Approx(2.0));
  CHECK((r.x - vec({1, 1})).norm() < 1e-12);

  LpProblem u;
  u.c = vec({1});
  u.G = Mat::Ones(1, 1);
  u.h = vec({0});
  const auto ru = lp_solve(u);
  CHECK(ru.status == LpStatus::Unbounded);
  CHECK(ru.ray(0) > 0.0);

  LpProblem inf;
  inf.c = vec({1});
  inf.G.resize(2, 1);
  inf.G << 1, -1;
  inf.h = vec({2, -1});  // x >= 2 and x <= 1
  CHECK(lp_solve(inf).status == LpStatus::Infeasible);
}

TEST_CASE("lp matches vertex enumeration on random instances") {
  CounterRng rng(101);
  int optimal = 0, infeasible = 0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(3));  // 2..4 vars
    const Index extra = static_cast<Index>(rng.below(static_cast<std::uint64_t>(10 - 2 * n + 1)));
    const Index me = t % 4 == 0 ? 1 : 0;
    LpProblem p;
    p.c = gaussian_matrix(rng, n, 1).col(0);
    p.G = Mat::Zero(2 * n + extra, n);
    p.h = Vec::Zero(2 * n + extra);
    for (Index i = 0; i < n; ++i) {
      p.G(2 * i, i) = 1.0;
      p.h(2 * i) = -rng.uniform(0.5, 3.0);
      p.G(2 * i + 1, i) = -1.0;
      p.h(2 * i + 1) = -rng.uniform(0.5, 3.0);
    }
    Vec x0(n);
    for (Index i = 0; i < n; ++i) x0(i) = rng.uniform(-0.4, 0.4);
    for (Index k = 0; k < extra; ++k) {
      const Vec g = gaussian_matrix(rng, n, 1).col(0);
      p.G.row(2 * n + k) = g.transpose();
      // Occasionally make the system infeasible.
      p.h(2 * n + k) = g.dot(x0) - (t % 7 == 3 ? -5.0 : rng.uniform(0.0, 1.0));
    }
    if (me) {
      p.E = gaussian_matrix(rng, 1, n);
      p.f = p.E * x0;
    } else {
      p.E.resize(0, n);
      p.f.resize(0);
    }
    const auto res = lp_solve(p);
    const auto best = oracle::lp_vertex_max(p.c, p.E, p.f, p.G, p.h);
    if (!best) {
      CHECK(res.status == LpStatus::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(std::abs(res.value - *best) <= 1e-9);
    CHECK((p.G * res.x - p.h).minCoeff() >= -1e-9);
    ++optimal;
  }
  CHECK(optimal > 50);
  CHECK(infeasible > 0);
}

TEST_CASE("lp survives a highly degenerate vertex") {
  // Many constraints through the origin: z^T b_l >= 0 for points on a circle,
  // plus a normalizing equality. Typical of determinant row updates.
  CounterRng rng(7);
  const Index N = 200;
  Mat B(3, N);
  for (Index l = 0; l < N; ++l) {
    Vec h = uniform_simplex(rng, 3);
    if (l < 3) h = Vec::Unit(3, l);
    B.col(l) = h;
  }
  LpProblem p;
  p.c = vec({1.0, -0.5, 0.25});
  p.G = B.transpose();
  p.h = Vec::Zero(N);
  p.E = Mat::Ones(1, 3);
  p.f = vec({1.0});
  const auto res = lp_solve(p);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.value == doctest::Approx(1.0));
  CHECK((p.G * res.x).minCoeff() >= -1e-12);
}

TEST_CASE("qp reduces to clipping and simplex projection") {
  CounterRng rng(41);
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(5));
    const Vec a = gaussian_matrix(rng, n, 1).col(0);
    const Mat P = 2.0 * Mat::Identity(n, n);
    const Vec q = -2.0 * a;
    const auto clip = qp_affine_nonneg(P, q, Mat(0, n), Vec(0), Mat::Identity(n, n));
    CHECK(clip.status == QpStatus::Solved);
    CHECK((clip.x - a.cwiseMax(0.0)).norm() < 1e-7);
    const auto sim = qp_affine_nonneg(P, q, Mat::Ones(1, n), Vec::Ones(1), Mat::Identity(n, n));
    CHECK(sim.status == QpStatus::Solved);
    CHECK((sim.x - simplex_project(a)).norm() < 1e-7);
  }
}

TEST_CASE("qp matches active-set enumeration") {
  CounterRng rng(43);
  for (int t = 0; t < 40; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(3));
    const Mat F = gaussian_matrix(rng, n, n);
    const Mat P = F * F.transpose() + 0.1 * Mat::Identity(n, n);
    const Vec q = gaussian_matrix(rng, n, 1).col(0);
    const Mat G = gaussian_matrix(rng, n + 2, n);
    Mat E(0, n);
    Vec f(0);
    // Make the feasible set nonempty: take an interior point x0 with Gx0 > 0.
    Vec x0 = gaussian_matrix(rng, n, 1).col(0);
    Mat Gf = G;
    for (Index i = 0; i < Gf.rows(); ++i)
      if (Gf.row(i).dot(x0) < 0) Gf.row(i) *= -1.0;
    if (t % 2) {
      E = gaussian_matrix(rng, 1, n);
      f = E * x0;
    }
    const auto res = qp_affine_nonneg(P, q, E, f, Gf);
    const auto ref = oracle::qp_active_set(P, q, E, f, Gf);
    REQUIRE(ref.has_value());
    CHECK(res.status == QpStatus::Solved);
    CHECK((res.x - *ref).norm() <= 1e-6 * std::max(1.0, ref->norm()));
  }
}

TEST_CASE("qp reports inconsistent equalities") {
  Mat E(2, 2);
  E << 1, 1, 1, 1;
  const auto r = qp_affine_nonneg(Mat::Identity(2, 2), Vec::Zero(2), E, vec({1, 2}), Mat::Identity(2, 2));
  CHECK(r.status == QpStatus::Infeasible);
}

TEST_CASE("dual active-set qp matches active-set enumeration") {
  CounterRng rng(47);
  for (int t = 0; t < 60; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(3));
    const Mat F = gaussian_matrix(rng, n, n);
    const Mat P = F * F.transpose() + 0.1 * Mat::Identity(n, n);
    const Vec q = 3.0 * gaussian_matrix(rng, n, 1).col(0);
    Mat G = gaussian_matrix(rng, n + 3, n);
    const Vec x0 = gaussian_matrix(rng, n, 1).col(0);
    for (Index i = 0; i < G.rows(); ++i)
      if (G.row(i).dot(x0) < 0) G.row(i) *= -1.0;
    Mat E(0, n);
    Vec f(0);
    if (t % 2) {
      E = gaussian_matrix(rng, 1, n);
      f = E * x0;
    }
    const auto res = qp_dual_active_set(P, q, E, f, G, Vec::Zero(G.rows()));
    const auto ref = oracle::qp_active_set(P, q, E, f, G);
    REQUIRE(ref.has_value());
    CHECK(res.status == QpStatus::Solved);
    CHECK((res.x - *ref).norm() <= 1e-9 * std::max(1.0, ref->norm()));
    CHECK(res.primal_residual <= 1e-12);
  }
}

TEST_CASE("dual active-set qp projections and infeasibility") {
  const Vec a = vec({0.9, 0.6, -0.4});
  const Mat I = Mat::Identity(3, 3);
  const auto sim = qp_dual_active_set(I, -a, Mat::Ones(1, 3), Vec::Ones(1), I, Vec::Zero(3));
  CHECK(sim.status == QpStatus::Solved);
  CHECK((sim.x - vec({0.65, 0.35, 0.0})).norm() < 1e-14);
  // Shifted bounds x >= h.
  const auto box = qp_dual_active_set(I, -a, Mat(0, 3), Vec(0), I, vec({1, 0, 0}));
  CHECK((box.x - vec({1.0, 0.6, 0.0})).norm() < 1e-14);
  // x1 >= 1 and -x1 >= 0 cannot both hold.
  Mat G(2, 3);
  G << 1, 0, 0, -1, 0, 0;
  CHECK(qp_dual_active_set(I, -a, Mat(0, 3), Vec(0), G, vec({1, 0})).status == QpStatus::Infeasible);
  Mat E(2, 3);
  E << 1, 1, 0, 1, 1, 0;
  CHECK(qp_dual_active_set(I, -a, E, vec({1, 2}), Mat(0, 3), Vec(0)).status == QpStatus::Infeasible);
}

TEST_CASE("mvee of axis points") {
  Mat P(2, 2);
  P << 1, 0, 0, 1;
  auto e = mvee_centered(P);
  CHECK(e.L.isApprox(Mat::Identity(2, 2), 1e-6));
  P << 2, 0, 0, 1;
  e = mvee_centered(P);
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 0.25;
  expect(1, 1) = 1.0;
  CHECK(e.L.isApprox(expect, 1e-6));

  Mat same(2, 3);
  same << 1, 1, 1, 1, 1, 1;
  CHECK_THROWS_AS(mvee_centered(same), Error);
}

TEST_CASE("mvee feasibility and activity audit") {
  CounterRng rng(61);
  for (int t = 0; t < 10; ++t) {
    const Mat pts = gaussian_matrix(rng, 2, 20);
    const auto e = mvee_centered(pts);
    const Vec q = (pts.transpose() * e.L).cwiseProduct(pts.transpose()).rowwise().sum();
    CHECK(q.maxCoeff() <= 1.0 + 1e-7);
    CHECK((q.array() >= 1.0 - 1e-6).count() >= 2);
    Eigen::SelfAdjointEigenSolver<Mat> eig(e.L);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK((e.L - e.L.transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("mvee volume matches axis-aligned search on symmetric data") {
  // With data symmetric about both axes the optimal ellipse is axis aligned:
  // minimize log(a^2 b^2) where b^2(a) = max y^2 / (1 - x^2/a^2).
  CounterRng rng(67);
  for (int t = 0; t < 10; ++t) {
    const Index k = 3 + static_cast<Index>(rng.below(4));
    Mat pts(2, 2 * k);
    for (Index i = 0; i < k; ++i) {
      const double x = rng.uniform(0.1, 2.0), y = rng.uniform(0.1, 2.0);
      pts.col(2 * i) << x, y;
      pts.col(2 * i + 1) << x, -y;
    }
    const double xmax2 = pts.row(0).cwiseAbs2().maxCoeff();
    auto obj = [&](double a2) {
      double b2 = 0.0;
      for (Index j = 0; j < pts.cols(); ++j)
        b2 = std::max(b2, pts(1, j) * pts(1, j) / (1.0 - pts(0, j) * pts(0, j) / a2));
      return std::log(a2) + std::log(b2);
    };
    // Golden-section search on log(a2) over (xmax2, 1e4 * xmax2).
    double lo = std::log(xmax2 * (1 + 1e-12)), hi = std::log(xmax2 * 1e4);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 300; ++it) {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      (obj(std::exp(m1)) < obj(std::exp(m2)) ? hi : lo) = (obj(std::exp(m1)) < obj(std::exp(m2)) ? m2 : m1);
    }
    const double ref = obj(std::exp(0.5 * (lo + hi)));
    const auto e = mvee_centered(pts);
    CHECK(-std::log(e.L.determinant()) == doctest::Approx(ref).epsilon(1e-5));
  }
}

TEST_CASE("constrained least squares by ADMM") {
  CounterRng rng(71);
  const Mat A = uniform_matrix(rng, 12, 3);
  Mat Y0 = uniform_matrix(rng, 3, 8);
  sparsify_exact(rng, Y0, 0.6);
  const Mat B = A * Y0;
  AdmmState st;
  constrained_ls_admm(A, B, prox_nonneg(), st, {1e-10, 5000});
  CHECK(st.converged);
  CHECK((st.Y - Y0).cwiseAbs().maxCoeff() < 1e-6);

  // Column-simplex constraint against the exact QP oracle.
  const Mat Bn = gaussian_matrix(rng, 12, 4);
  AdmmState s2;
  constrained_ls_admm(A, Bn, prox_column_simplex(1.0), s2, {1e-10, 20000});
  const Mat P = A.transpose() * A;
  for (Index j = 0; j < 4; ++j) {
    const Vec q = -(A.transpose() * Bn.col(j));
    const auto ref = oracle::qp_active_set(P, q, Mat::Ones(1, 3), Vec::Ones(1), Mat::Identity(3, 3));
    REQUIRE(ref.has_value());
    CHECK((s2.Y.col(j) - *ref).norm() < 1e-6);
  }
}

TEST_CASE("l1 regularized prox thresholds") {
  auto prox = prox_nonneg({Regularizer::Kind::L1, 2.0});
  Mat Y(1, 3);
  Y << 3, 0.5, -1;
  prox(Y, 1.0);
  CHECK(Y(0, 0) == doctest::Approx(2.0));
  CHECK(Y(0, 1) == 0.0);
  CHECK(Y(0, 2) == 0.0);
}

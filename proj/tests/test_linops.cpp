#include <doctest.h>

#include <cmath>

#include "redmap/linops.hpp"
#include "support.hpp"

using namespace redmap;
using testkit::Gen;

namespace {

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("SymMatrix stores the symmetric part") {
  const SymMatrix s(m2(1, 2, 4, 3));
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(s.mat().isApprox(s.mat().transpose(), 0.0));
}

TEST_CASE("sym_eig on diagonal and identity inputs") {
  const EigenPairs d = sym_eig(SymMatrix::diagonal(v({2, 5})));
  CHECK(d.values(0) == doctest::Approx(2.0));
  CHECK(d.values(1) == doctest::Approx(5.0));
  CHECK((d.vectors.cwiseAbs() - Mat::Identity(2, 2)).norm() < 1e-14);

  const EigenPairs id = sym_eig(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(id.values(i) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig matches the closed-form 2x2 spectrum") {
  const EigenPairs e = sym_eig(SymMatrix(m2(22, -20, -20, 20)));
  const auto [lo, hi] = testkit::eig2(22, -20, 20);
  CHECK(lo == doctest::Approx(21 - std::sqrt(401.0)).epsilon(1e-14));
  CHECK(e.values(0) == doctest::Approx(lo).epsilon(1e-13));
  CHECK(e.values(1) == doctest::Approx(hi).epsilon(1e-13));
  // Frozen from the closed form above.
  CHECK(e.values(0) == doctest::Approx(0.97501560549).epsilon(1e-10));
  CHECK(e.values(1) == doctest::Approx(41.02498439451).epsilon(1e-12));
}

TEST_CASE("sym_eig rejects non-finite input") {
  Mat a = Mat::Identity(2, 2);
  a(0, 0) = NAN;
  try {
    sym_eig(SymMatrix(a));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFinite);
  }
}

TEST_CASE("property: sym_eig reconstructs its input") {
  Gen g(101);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = g.integer(1, 30);
    const Mat a = g.symmetric(n) * std::pow(10.0, g.uniform(-3, 3));
    const EigenPairs e = sym_eig(SymMatrix(a));
    const Mat rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((rec - a).norm() <= 1e-9 * a.norm());
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).norm() < 1e-10);
    for (int i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
  }
}

TEST_CASE("gen_eig_extremes examples") {
  Extremes s = gen_eig_extremes(SymMatrix(Mat::Constant(1, 1, 2.0)), SymMatrix(Mat::Constant(1, 1, 2.0)));
  CHECK(s.min == doctest::Approx(1.0));
  CHECK(s.max == doctest::Approx(1.0));

  Mat b(2, 1);
  b << 1, 1;
  const Mat h = m2(22, -20, -20, 20);
  s = gen_eig_extremes(SymMatrix(b.transpose() * h * b), SymMatrix(b.transpose() * b));
  CHECK(s.min == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.max == doctest::Approx(1.0).epsilon(1e-14));

  s = gen_eig_extremes(SymMatrix::diagonal(v({4, 9})), SymMatrix::identity(2));
  CHECK(s.min == doctest::Approx(4.0));
  CHECK(s.max == doctest::Approx(9.0));
}

TEST_CASE("gen_eig_extremes rejects a singular b") {
  try {
    gen_eig_extremes(SymMatrix::identity(2), SymMatrix::diagonal(v({1, 0})));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotSPD);
  }
}

TEST_CASE("property: gen_eig_extremes agrees with an independent generalized solver") {
  Gen g(202);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(1, 12);
    const Mat a = g.symmetric(n);
    const Mat b = g.spd(n, 0.5);
    const Extremes e = gen_eig_extremes(SymMatrix(a), SymMatrix(b));
    const auto [lo, hi] = testkit::gen_extremes_oracle(a, b);
    const double scale = 1.0 + std::max(std::abs(lo), std::abs(hi));
    CHECK(std::abs(e.min - lo) <= 1e-10 * scale);
    CHECK(std::abs(e.max - hi) <= 1e-10 * scale);
    const Vec all = gen_eig_values(SymMatrix(a), SymMatrix(b));
    CHECK(all(0) == doctest::Approx(e.min));
    CHECK(all(n - 1) == doctest::Approx(e.max));
  }
}

TEST_CASE("property: Rayleigh quotient on an embedded subspace interlaces") {
  Gen g(303);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = g.integer(2, 10);
    const int k = g.integer(1, n - 1);
    const Mat a = g.symmetric(n) * g.uniform(0.1, 10.0);
    const Mat b = g.full_rank(n, k);
    const Extremes e = gen_eig_extremes(SymMatrix(b.transpose() * a * b), SymMatrix(b.transpose() * b));
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(n - 1);
    const double slack = 1e-10 * std::max(1.0, std::max(std::abs(lmin), std::abs(lmax)));
    CHECK(e.min >= lmin - slack);
    CHECK(e.max <= lmax + slack);
    CHECK(e.min <= e.max);
  }
}

TEST_CASE("spd_solve examples") {
  CHECK((spd_solve(SymMatrix::identity(2), v({3, 4})) - v({3, 4})).norm() < 1e-15);
  CHECK(spd_solve(SymMatrix(Mat::Constant(1, 1, 2.0)), v({6}))(0) == doctest::Approx(3.0));
  CHECK((spd_solve(SymMatrix::diagonal(v({2, 1})), v({2, 5})) - v({1, 5})).norm() < 1e-15);
}

TEST_CASE("spd_solve rejects indefinite matrices") {
  try {
    spd_solve(SymMatrix::diagonal(v({1, -1})), v({1, 1}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotSPD);
  }
}

TEST_CASE("cg_solve examples") {
  const CgResult id = cg_solve([](const Vec& x) { return x; }, v({1, 2, 3}), 1e-10, 10);
  CHECK(id.converged);
  CHECK(id.iters == 1);
  CHECK((id.solution - v({1, 2, 3})).norm() < 1e-14);

  const CgResult d = cg_solve([](const Vec& x) { return Vec(v({2, 1}).cwiseProduct(x)); }, v({2, 1}), 1e-10, 10);
  CHECK(d.converged);
  CHECK((d.solution - v({1, 1})).norm() < 1e-12);
}

TEST_CASE("cg_solve matches spd_solve on a random 20x20 system") {
  Gen g(7);
  const Mat a = g.spd(20);
  const Vec rhs = g.vec(20);
  const CgResult r = cg_solve([&](const Vec& x) { return Vec(a * x); }, rhs, 1e-12, 200);
  const Vec direct = spd_solve(SymMatrix(a), rhs);
  CHECK(r.converged);
  CHECK((r.solution - direct).norm() <= 1e-8 * direct.norm());
}

TEST_CASE("property: cg_solve and spd_solve agree up to dimension 200") {
  Gen g(404);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = g.integer(1, 200);
    const Mat a = g.spd(n);
    const Vec rhs = g.vec(n);
    const CgResult r = cg_solve([&](const Vec& x) { return Vec(a * x); }, rhs, 1e-12, 4 * n);
    const Vec direct = spd_solve(SymMatrix(a), rhs);
    CHECK(r.converged);
    CHECK((r.solution - direct).norm() <= 1e-8 * direct.norm());
    // Independent oracle: Eigen's LDLT.
    const Vec ldlt = a.ldlt().solve(rhs);
    CHECK((direct - ldlt).norm() <= 1e-10 * ldlt.norm());
  }
}

TEST_CASE("cg_solve reports non-convergence without throwing") {
  Gen g(9);
  const Mat a = g.spd(30, 1e-3);
  const CgResult r = cg_solve([&](const Vec& x) { return Vec(a * x); }, g.vec(30), 1e-14, 2);
  CHECK_FALSE(r.converged);
  CHECK(r.iters == 2);
}

TEST_CASE("cg_solve validates its parameters") {
  const auto id = [](const Vec& x) { return x; };
  CHECK_THROWS_AS(cg_solve(id, v({1}), 0.0, 5), Error);
  CHECK_THROWS_AS(cg_solve(id, v({1}), 1e-8, 0), Error);
}

TEST_CASE("spectral norm, bases and null spaces") {
  Gen g(11);
  const Mat a = g.mat(7, 4);
  Eigen::JacobiSVD<Mat> svd(a);
  CHECK(spectral_norm(a) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));

  const Mat q = orthonormal_basis(a);
  CHECK(q.cols() == 4);
  CHECK((q.transpose() * q - Mat::Identity(4, 4)).norm() < 1e-12);
  CHECK((q * (q.transpose() * a) - a).norm() < 1e-10 * a.norm());

  const Mat c = orthogonal_complement(a);
  CHECK(c.cols() == 3);
  CHECK((c.transpose() * a).norm() < 1e-10 * a.norm());
  CHECK(orthogonal_complement(Mat(5, 0)).cols() == 5);

  Mat rank_def(3, 2);
  rank_def << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(orthonormal_basis(rank_def), Error);
  const Mat ns = null_space(rank_def);
  CHECK(ns.cols() == 1);
  CHECK((rank_def * ns).norm() < 1e-12);
}

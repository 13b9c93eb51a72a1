#include <doctest.h>

#include <cmath>
#include <numbers>

#include "redmap/problems.hpp"
#include "redmap/propcheck.hpp"
#include "redmap/reduced.hpp"
#include "support.hpp"

using namespace redmap;
using testkit::Gen;

namespace {

Vec s1(double x) { return Vec::Constant(1, x); }

}  // namespace

TEST_CASE("f_reduced on the 2-D quadratic") {
  const ProblemSpec q = make_quad2d(10);
  CHECK(q.reduced("linear").f_reduced(s1(2)) == doctest::Approx(4.0));
  CHECK(q.reduced("fixed").f_reduced(s1(1)) == doctest::Approx(11.0));
  CHECK(q.reduced("nonlinear").f_reduced(s1(0)) == 0.0);
}

TEST_CASE("grad_reduced examples") {
  const ProblemSpec q = make_quad2d(10);
  const ReducedProblem lin = q.reduced("linear");
  CHECK(lin.grad_reduced(s1(3))(0) == doctest::Approx(6.0));
  const Vec fd = testkit::fd_grad([&](const Vec& x) { return lin.f_reduced(x); }, s1(3));
  CHECK(fd(0) == doctest::Approx(6.0).epsilon(1e-8));

  const ProblemSpec t = make_highdim_tanh(12, 10, 1, 3);
  CHECK(t.reduced("tanh").grad_reduced(Vec::Zero(12)).norm() == 0.0);

  // Constructed minimisers on S_F.
  CHECK(q.reduced("nonlinear").grad_reduced(s1(0)).norm() <= 1e-10);
  const ProblemSpec fq = make_flat_quartic_sine(-0.5, 0.5);
  for (double x : {-0.5, -0.1, 0.0, 0.3, 0.5}) {
    CHECK(fq.reduced("sine").grad_reduced(s1(x)).norm() <= 1e-10);
    CHECK(fq.reduced("sine_implicit").grad_reduced(s1(x)).norm() <= 1e-10);
  }
}

TEST_CASE("hess_reduced on the 2-D quadratic") {
  const ProblemSpec q = make_quad2d(10);
  for (double x : {-1.3, 0.0, 0.4, 2.0}) CHECK(q.reduced("linear").hess_reduced(s1(x))(0, 0) == doctest::Approx(2.0));
  CHECK(q.reduced("fixed").hess_reduced(s1(0))(0, 0) == doctest::Approx(22.0));
  CHECK(q.reduced("nonlinear").hess_reduced(s1(0))(0, 0) == doctest::Approx(82.0));
}

TEST_CASE("correction_term examples") {
  const ProblemSpec q = make_quad2d(10);
  CHECK(q.reduced("linear").correction_term(s1(0.7)).mat().isZero(0.0));

  const ReducedProblem nl = q.reduced("nonlinear");
  const double x = std::numbers::pi / 2;
  CHECK(nl.correction_term(s1(x))(0, 0) == doctest::Approx(-80.0).epsilon(1e-12));
  // Oracle: full reduced Hessian minus the Gauss part.
  const Mat dphi = nl.mapping().d_phi(s1(x));
  const Mat gauss = dphi.transpose() * nl.objective().hessian(nl.mapping().phi(s1(x))) * dphi;
  CHECK(nl.hess_reduced(s1(x))(0, 0) - gauss(0, 0) == doctest::Approx(-80.0).epsilon(1e-12));

  // grad_{x2} f vanishes at 0 for x2 = x1 - 2 sin x1.
  CHECK(std::abs(nl.correction_term(s1(0))(0, 0)) == 0.0);
}

TEST_CASE("pullback_metric and metric_extremes examples") {
  const ProblemSpec q = make_quad2d(10);
  CHECK(q.reduced("linear").pullback_metric(s1(0.3))(0, 0) == 2.0);
  Extremes e = q.reduced("linear").metric_extremes(s1(0.3));
  CHECK(e.min == doctest::Approx(2.0));
  CHECK(e.max == doctest::Approx(2.0));
  e = q.reduced("fixed").metric_extremes(s1(0.3));
  CHECK(e.min == 1.0);
  CHECK(e.max == 1.0);

  const ProblemSpec hd = make_highdim_quadratic(10, 10, 17);
  const Mat& k = *hd.coupling;
  const Mat r = hd.reduced("linear").pullback_metric(Vec::Ones(10)).mat();
  CHECK((r - (Mat::Identity(10, 10) + k.transpose() * k)).norm() <= 1e-12);

  const ProblemSpec th = make_highdim_tanh(10, 10, 0.7, 17);
  Gen g(1);
  const Vec x = g.vec(10);
  const Vec s = (Vec::Ones(10).array() - (th.coupling->operator*(x)).array().tanh().square()).matrix();
  const Mat expected = Mat::Identity(10, 10) + 0.49 * th.coupling->transpose() * s.cwiseAbs2().asDiagonal() * *th.coupling;
  CHECK((th.reduced("tanh").pullback_metric(x).mat() - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("metric_extremes of an orthogonal projection are (1, 2)") {
  Gen g(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(2, 8);
    const int k = g.integer(1, n - 1);
    const Mat basis = orthonormal_basis(g.full_rank(n, k));
    const Mat proj = basis * basis.transpose();
    const auto m = ReductionMapping::affine(proj, Vec::Zero(n));
    const ReducedProblem p(quadratic_objective(n, Mat::Identity(2 * n, 2 * n), Vec::Zero(2 * n)), m);
    const Extremes e = p.metric_extremes(g.vec(n));
    CHECK(e.min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.max == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("evaluate fills the order-1 and order-2 fields consistently") {
  const ReducedProblem p = make_quad2d(10).reduced("nonlinear");
  const ReducedPoint a = p.evaluate(s1(0.4), 1);
  const ReducedPoint b = p.evaluate(s1(0.4), 2);
  CHECK(a.value == b.value);
  CHECK(a.grad == b.grad);
  CHECK(a.metric == b.metric);
  CHECK((b.hess - (b.gauss_part + b.correction)).norm() == 0.0);
  CHECK(b.grad_x2()(0) == doctest::Approx(20.0 * (0.4 - 2 * std::sin(0.4) - 0.4)));
  CHECK_THROWS_AS(ReducedProblem(make_quad2d(1).objective, ReductionMapping::constant(2, Vec::Zero(1))), Error);
}

namespace {

struct Bench {
  std::string label;
  ReducedProblem problem;
  double spread;
};

std::vector<Bench> benchmark_problems() {
  std::vector<Bench> out;
  for (const std::string& name : problem_names()) {
    const ProblemSpec spec = make_problem(name, {}, 99);
    for (const std::string& m : spec.mapping_names()) {
      out.push_back({name + "/" + m, spec.reduced(m), spec.objective.n1 > 1 ? 0.5 : 1.5});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("property: chain rule agrees with finite differences on every built-in problem") {
  Gen g(808);
  for (const Bench& b : benchmark_problems()) {
    INFO(b.label);
    for (int pt = 0; pt < 50; ++pt) {
      Vec x(b.problem.n1());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g.uniform(-b.spread, b.spread);
      const Vec grad = b.problem.grad_reduced(x);
      const Vec fd = testkit::fd_grad([&](const Vec& y) { return b.problem.f_reduced(y); }, x);
      CHECK((grad - fd).norm() <= 1e-5 * (1.0 + grad.norm()));
      const Mat h = b.problem.hess_reduced(x).mat();
      const Mat fdh = testkit::fd_jac([&](const Vec& y) { return b.problem.grad_reduced(y); }, x, 1e-5);
      CHECK((h - fdh).norm() <= 1e-4 * (1.0 + h.norm()));
    }
  }
}

TEST_CASE("property: affine mappings carry no correction term") {
  Gen g(909);
  for (int trial = 0; trial < 50; ++trial) {
    const int n1 = g.integer(1, 5), n2 = g.integer(1, 5);
    const int n = n1 + n2;
    const auto m = ReductionMapping::affine(g.mat(n2, n1), g.vec(n2));
    // Non-quadratic objective: sum cosh(x_i) + (sum x)^2 / 2.
    Objective f;
    f.n1 = n1;
    f.n2 = n2;
    f.value = [](const Vec& x) { return x.array().cosh().sum() + 0.5 * x.sum() * x.sum(); };
    f.gradient = [](const Vec& x) { return Vec(x.array().sinh().matrix() + Vec::Constant(x.size(), x.sum())); };
    f.hessian = [n](const Vec& x) { return Mat(Mat(x.array().cosh().matrix().asDiagonal()) + Mat::Ones(n, n)); };
    const ReducedProblem p(f, m);
    const ReducedPoint pt = p.evaluate(g.vec(n1), 2);
    CHECK(pt.correction.cwiseAbs().maxCoeff() == 0.0);
    CHECK((pt.hess - pt.gauss_part).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pt.gauss_part - pt.d_phi.transpose() * pt.hess_full * pt.d_phi).norm() <= 1e-12 * pt.gauss_part.norm());
  }
}

TEST_CASE("property: constant mappings are isometric") {
  Gen g(910);
  for (int trial = 0; trial < 20; ++trial) {
    const int n1 = g.integer(1, 6), n2 = g.integer(1, 6);
    const auto m = ReductionMapping::constant(n1, g.vec(n2));
    const ReducedProblem p(quadratic_objective(n1, g.spd(n1 + n2), g.vec(n1 + n2)), m);
    CHECK(p.pullback_metric(g.vec(n1)).mat() == Mat::Identity(n1, n1));
  }
}

TEST_CASE("high-dimensional quadratic: reduced Hessian equals the metric") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ProblemSpec hd = make_highdim_quadratic(40, 10, seed);
    const ReducedProblem p = hd.reduced("linear");
    Gen g(seed);
    const Vec x = g.vec(40);
    const Mat h = p.hess_reduced(x).mat();
    const Mat r = p.pullback_metric(x).mat();
    CHECK((h - r).cwiseAbs().maxCoeff() <= 1e-12);
    const Mat& k = *hd.coupling;
    CHECK((h - (Mat::Identity(40, 40) + k.transpose() * k)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("tanh problem: reduced Hessian has the g = s.s - 2 t.t.s form") {
  Gen g(31);
  for (double alpha : {0.3, 1.0, 2.0}) {
    const ProblemSpec th = make_highdim_tanh(20, 10, alpha, 8);
    const ReducedProblem p = th.reduced("tanh");
    const Mat& k = *th.coupling;
    for (int pt = 0; pt < 5; ++pt) {
      const Vec x = g.vec(20);
      const Vec t = (k * x).array().tanh().matrix();
      const Vec s = (1.0 - t.array().square()).matrix();
      const Vec gv = (s.array() * s.array() - 2.0 * t.array() * t.array() * s.array()).matrix();
      const Mat expected = Mat::Identity(20, 20) + alpha * alpha * k.transpose() * gv.asDiagonal() * k;
      CHECK((p.hess_reduced(x).mat() - expected).cwiseAbs().maxCoeff() <= 1e-10);
      const Vec grad = x + alpha * alpha * k.transpose() * s.cwiseProduct(t);
      CHECK((p.grad_reduced(x) - grad).norm() <= 1e-12 * (1.0 + grad.norm()));
    }
  }
}

TEST_CASE("check_derivatives flags a wrong Hessian") {
  Objective f = make_quad2d(10).objective;
  Vec x(2);
  x << 0.3, -0.2;
  CHECK(check_derivatives(f, x).ok);
  const auto h = f.hessian;
  f.hessian = [h](const Vec& y) {
    Mat m = h(y);
    m(0, 0) += 1.0;
    return m;
  };
  CHECK_FALSE(check_derivatives(f, x).ok);
}

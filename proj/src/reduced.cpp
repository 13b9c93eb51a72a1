#include "redmap/reduced.hpp"

#include <cmath>

namespace redmap {

DerivativeCheck check_derivatives(const Objective& f, const Vec& x, double grad_tol, double hess_tol) {
  DerivativeCheck out;
  const Vec g = f.gradient(x);
  const Mat h = f.hessian(x);
  const Mat g_fd = fd_jacobian([&](const Vec& y) { return Vec::Constant(1, f.value(y)); }, x).transpose();
  const Mat h_fd = fd_jacobian(f.gradient, x);
  out.grad_rel_err = (g - Vec(g_fd.col(0))).norm() / (1.0 + g.norm());
  out.hess_rel_err = (h - h_fd).norm() / (1.0 + h.norm());
  out.ok = std::isfinite(out.grad_rel_err) && std::isfinite(out.hess_rel_err) && out.grad_rel_err <= grad_tol &&
           out.hess_rel_err <= hess_tol;
  return out;
}

ReducedProblem::ReducedProblem(Objective objective, ReductionMapping mapping)
    : f_(std::move(objective)), psi_(std::move(mapping)) {
  if (f_.n1 != psi_.n1() || f_.n2 != psi_.n2()) {
    throw Error(Errc::DimensionMismatch, "objective split does not match mapping dimensions");
  }
}

ReducedPoint ReducedProblem::evaluate(const Vec& x1, int order) const {
  const int n1 = f_.n1;
  const int n2 = f_.n2;
  MappingJet jet = psi_.jet(x1, order);

  ReducedPoint p;
  p.x1 = x1;
  p.x.resize(n1 + n2);
  p.x << x1, jet.value;
  p.value = f_.value(p.x);
  p.grad_full = f_.gradient(p.x);
  if (!std::isfinite(p.value) || !p.grad_full.allFinite()) throw Error(Errc::NonFinite, "objective is not finite");

  p.d_phi.resize(n1 + n2, n1);
  p.d_phi << Mat::Identity(n1, n1), jet.jacobian;
  p.grad = p.d_phi.transpose() * p.grad_full;
  p.metric = Mat::Identity(n1, n1) + jet.jacobian.transpose() * jet.jacobian;
  if (order < 2) return p;

  const Mat h = f_.hessian(p.x);
  if (!h.allFinite()) throw Error(Errc::NonFinite, "objective Hessian is not finite");
  p.hess_full = 0.5 * (h + h.transpose());
  p.gauss_part = p.d_phi.transpose() * p.hess_full * p.d_phi;
  p.gauss_part = 0.5 * (p.gauss_part + p.gauss_part.transpose()).eval();
  p.d2_psi = std::move(*jet.hess);
  // Contract the n2 x n1 x n1 second derivative with grad_{x2} f over its first index.
  p.correction = p.d2_psi.contract_first(p.grad_x2());
  p.hess = p.gauss_part + p.correction;
  return p;
}

double ReducedProblem::f_reduced(const Vec& x1) const { return f_.value(psi_.phi(x1)); }

Vec ReducedProblem::grad_reduced(const Vec& x1) const { return evaluate(x1, 1).grad; }

SymMatrix ReducedProblem::hess_reduced(const Vec& x1) const { return SymMatrix(evaluate(x1, 2).hess); }

SymMatrix ReducedProblem::correction_term(const Vec& x1) const { return SymMatrix(evaluate(x1, 2).correction); }

SymMatrix ReducedProblem::pullback_metric(const Vec& x1) const {
  const Mat j = psi_.d_psi(x1);
  return SymMatrix(Mat::Identity(f_.n1, f_.n1) + j.transpose() * j);
}

Extremes ReducedProblem::metric_extremes(const Vec& x1) const {
  const Vec ev = sym_eig(pullback_metric(x1)).values;
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace redmap

#include "redmap/mapping.hpp"

#include <cmath>
#include <string>

namespace redmap {

Mat Tensor3::contract_first(const Vec& v) const {
  if (v.size() != dim0()) throw Error(Errc::DimensionMismatch, "Tensor3::contract_first: vector length");
  Mat out = Mat::Zero(dim1(), dim2());
  for (Eigen::Index k = 0; k < dim0(); ++k) out += v(k) * slices[static_cast<std::size_t>(k)];
  return out;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (const auto& s : slices) m = std::max(m, s.cwiseAbs().maxCoeff());
  return m;
}

double injective_norm_bound(const Tensor3& t) {
  if (t.dim0() == 0) return 0.0;
  if (t.dim0() == 1) return spectral_norm(t.slices.front());
  double sq = 0.0;
  for (const auto& s : t.slices) {
    const double n = spectral_norm(s);
    sq += n * n;
  }
  return std::sqrt(sq);
}

InnerSolveResult inner_solve(const InnerProblem& p, const Vec& x1, const Vec& u0) {
  if (!u0.allFinite() || !x1.allFinite()) throw Error(Errc::NonFinite, "inner_solve: non-finite input");
  if (u0.size() != p.n2 || x1.size() != p.n1) throw Error(Errc::DimensionMismatch, "inner_solve: input sizes");

  constexpr int kMaxHalvings = 30;
  InnerSolveResult out{u0, 0, 0.0};
  Vec g = p.grad_u(x1, out.u);
  out.grad_norm = g.norm();

  while (out.grad_norm > p.newton_tol) {
    if (out.iters >= p.newton_max_iter) {
      throw Error(Errc::InnerDivergence, "inner Newton did not reach ||grad_u G|| <= " +
                                             std::to_string(p.newton_tol) + " in " +
                                             std::to_string(p.newton_max_iter) + " iterations (residual " +
                                             std::to_string(out.grad_norm) + ")");
    }
    const Mat h = p.hess_uu(x1, out.u);
    if (!h.allFinite() || !g.allFinite()) throw Error(Errc::NonFinite, "inner_solve: NaN in inner derivatives");
    // Indefinite Hessians away from the SSOSC region still give a Newton step
    // on grad_u G = 0; the merit function decides acceptance.
    const Vec step = -h.fullPivLu().solve(g);

    const double merit = g.squaredNorm();
    double t = 1.0;
    Vec trial = out.u + step;
    Vec g_trial = p.grad_u(x1, trial);
    int halvings = 0;
    while (!(g_trial.allFinite() && g_trial.squaredNorm() <= (1.0 - 1e-4 * t) * merit)) {
      if (++halvings > kMaxHalvings) break;
      t *= 0.5;
      trial = out.u + t * step;
      g_trial = p.grad_u(x1, trial);
    }
    if (!g_trial.allFinite()) throw Error(Errc::NonFinite, "inner_solve: gradient became non-finite");
    // Past the halving budget take the shortest trial anyway; the iteration cap
    // reports persistent failure.
    out.u = trial;
    g = g_trial;
    out.grad_norm = g.norm();
    ++out.iters;
  }
  return out;
}

ReductionMapping::ReductionMapping(int n1, int n2, Kind kind)
    : n1_(n1), n2_(n2), kind_(std::move(kind)), cache_(std::make_shared<WarmStart>()) {
  if (n1 < 1 || n2 < 1) throw Error(Errc::InvalidParam, "mapping dimensions must be positive");
}

ReductionMapping ReductionMapping::constant(int n1, Vec x2) {
  const int n2 = static_cast<int>(x2.size());
  ReductionMapping m(n1, n2, Constant{std::move(x2)});
  m.name_ = "constant";
  return m;
}

ReductionMapping ReductionMapping::affine(Mat a, Vec b) {
  if (a.rows() != b.size()) throw Error(Errc::DimensionMismatch, "affine mapping: A rows != b size");
  const int n1 = static_cast<int>(a.cols());
  const int n2 = static_cast<int>(a.rows());
  ReductionMapping m(n1, n2, Affine{std::move(a), std::move(b)});
  m.name_ = "affine";
  return m;
}

ReductionMapping ReductionMapping::closed_form(int n1, int n2, ClosedForm fns) {
  if (!fns.value || !fns.jacobian) throw Error(Errc::InvalidParam, "closed-form mapping needs value and jacobian");
  ReductionMapping m(n1, n2, std::move(fns));
  m.name_ = "closed_form";
  return m;
}

ReductionMapping ReductionMapping::implicit_argmin(InnerProblem inner, Vec initial_guess) {
  if (!inner.grad_u || !inner.hess_uu || !inner.hess_x1u) {
    throw Error(Errc::InvalidParam, "implicit mapping needs grad_u, hess_uu and hess_x1u");
  }
  if (initial_guess.size() != inner.n2) throw Error(Errc::DimensionMismatch, "implicit mapping: initial guess size");
  const int n1 = inner.n1;
  const int n2 = inner.n2;
  ReductionMapping m(n1, n2,
                     ImplicitArgmin{std::make_shared<const InnerProblem>(std::move(inner)), std::move(initial_guess)});
  m.name_ = "implicit_argmin";
  return m;
}

bool ReductionMapping::is_affine() const {
  return std::holds_alternative<Constant>(kind_) || std::holds_alternative<Affine>(kind_);
}

ReductionMapping ReductionMapping::with_scale(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(Errc::InvalidParam, "scale_alpha must be positive");
  ReductionMapping m = *this;
  m.alpha_ = alpha;
  m.cache_ = std::make_shared<WarmStart>();
  return m;
}

ReductionMapping ReductionMapping::named(std::string name) const {
  ReductionMapping m = *this;
  m.name_ = std::move(name);
  return m;
}

void ReductionMapping::check_input(const Vec& x1) const {
  if (x1.size() != n1_) throw Error(Errc::DimensionMismatch, "mapping input has wrong dimension");
  if (!x1.allFinite()) throw Error(Errc::NonFinite, "mapping input is not finite");
}

Vec ReductionMapping::solve_inner(const ImplicitArgmin& k, const Vec& x1) const {
  Vec start = k.initial_guess;
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (cache_->u) start = *cache_->u;
  }
  InnerSolveResult r = inner_solve(*k.inner, x1, start);
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->x1 = x1;
    cache_->u = r.u;
  }
  return r.u;
}

Vec ReductionMapping::inner_solution(const Vec& x1) const {
  const auto* k = std::get_if<ImplicitArgmin>(&kind_);
  if (!k) throw Error(Errc::WrongMappingKind, "inner_solution needs an implicit-argmin mapping");
  check_input(x1);
  return solve_inner(*k, x1);
}

namespace {

struct JetVisitor {
  const Vec& x1;
  int order;
  int n1;
  int n2;
  const std::function<Vec(const ReductionMapping::ImplicitArgmin&, const Vec&)>& solve;

  MappingJet operator()(const ReductionMapping::Constant& c) const {
    MappingJet j{c.x2, Mat(), std::nullopt};
    if (order >= 1) j.jacobian = Mat::Zero(n2, n1);
    if (order >= 2) j.hess = Tensor3(n2, n1, n1);
    return j;
  }

  MappingJet operator()(const ReductionMapping::Affine& a) const {
    MappingJet j{a.a * x1 + a.b, Mat(), std::nullopt};
    if (order >= 1) j.jacobian = a.a;
    if (order >= 2) j.hess = Tensor3(n2, n1, n1);
    return j;
  }

  MappingJet operator()(const ReductionMapping::ClosedForm& c) const {
    MappingJet j{c.value(x1), Mat(), std::nullopt};
    if (order >= 1) j.jacobian = c.jacobian(x1);
    if (order >= 2) {
      if (!c.hessian) throw Error(Errc::MissingThirdDerivatives, "closed-form mapping has no second derivative");
      j.hess = c.hessian(x1);
    }
    return j;
  }

  MappingJet operator()(const ReductionMapping::ImplicitArgmin& k) const {
    const InnerProblem& p = *k.inner;
    MappingJet j{solve(k, x1), Mat(), std::nullopt};
    if (order < 1) return j;

    const Vec& u = j.value;
    const Mat h = p.hess_uu(x1, u);
    const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (!(lmin > p.sigma_floor)) {
      throw Error(Errc::SSOSCViolation,
                  "lambda_min(hess_uu G) = " + std::to_string(lmin) + " at the inner solution");
    }
    const auto h_llt = h.llt();
    // D Psi = -H^{-1} d2G/du dx1
    j.jacobian = -h_llt.solve(p.hess_x1u(x1, u));
    if (order < 2) return j;

    if (!p.has_third_derivatives()) {
      throw Error(Errc::MissingThirdDerivatives, "implicit mapping lacks third-derivative blocks");
    }
    const Tensor3 ta = p.d3_x1x1u(x1, u);
    const Tensor3 tb = p.d3_x1uu(x1, u);
    const Tensor3 tc = p.d3_uuu(x1, u);
    const Mat& jac = j.jacobian;

    // Differentiating grad_u G(x1, Psi(x1)) = 0 twice:
    //   H D2Psi[a,b] = -(A[a,b] + B[a, J b] + B[b, J a] + C[J a, J b])
    Tensor3 rhs(n2, n1, n1);
    for (Eigen::Index l = 0; l < n2; ++l) {
      const Mat bj = tb.slices[l] * jac;  // (n1 x n2)(n2 x n1)
      rhs.slices[l] = ta.slices[l] + bj + bj.transpose() + jac.transpose() * tc.slices[l] * jac;
    }
    Tensor3 d2(n2, n1, n1);
    const Mat h_inv = h_llt.solve(Mat::Identity(n2, n2));
    for (Eigen::Index k2 = 0; k2 < n2; ++k2) {
      for (Eigen::Index l = 0; l < n2; ++l) d2.slices[k2] -= h_inv(k2, l) * rhs.slices[l];
    }
    j.hess = std::move(d2);
    return j;
  }
};

}  // namespace

MappingJet ReductionMapping::jet(const Vec& x1, int order) const {
  check_input(x1);
  const std::function<Vec(const ImplicitArgmin&, const Vec&)> solve = [this](const ImplicitArgmin& k, const Vec& x) {
    return solve_inner(k, x);
  };
  MappingJet j = std::visit(JetVisitor{x1, order, n1_, n2_, solve}, kind_);

  if (j.value.size() != n2_) throw Error(Errc::DimensionMismatch, "psi returned wrong dimension");
  if (!j.value.allFinite()) throw Error(Errc::NonFinite, "psi value is not finite");
  j.value *= alpha_;
  if (order >= 1) {
    if (j.jacobian.rows() != n2_ || j.jacobian.cols() != n1_) {
      throw Error(Errc::DimensionMismatch, "psi jacobian has wrong shape");
    }
    j.jacobian *= alpha_;
  }
  if (j.hess) {
    if (j.hess->dim0() != n2_ || j.hess->dim1() != n1_ || j.hess->dim2() != n1_) {
      throw Error(Errc::DimensionMismatch, "psi second derivative has wrong shape");
    }
    for (auto& s : j.hess->slices) s = alpha_ * 0.5 * (s + s.transpose()).eval();
  }
  return j;
}

Vec ReductionMapping::psi(const Vec& x1) const { return jet(x1, 0).value; }

Mat ReductionMapping::d_psi(const Vec& x1) const { return jet(x1, 1).jacobian; }

Tensor3 ReductionMapping::d2_psi(const Vec& x1) const { return *jet(x1, 2).hess; }

Vec ReductionMapping::phi(const Vec& x1) const {
  Vec out(n1_ + n2_);
  out << x1, psi(x1);
  return out;
}

Mat ReductionMapping::d_phi(const Vec& x1) const {
  Mat out(n1_ + n2_, n1_);
  out << Mat::Identity(n1_, n1_), d_psi(x1);
  return out;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, double h_rel) {
  const double h = h_rel * (1.0 + x.norm());
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp(i) += h;
    xm(i) -= h;
    jac.col(i) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return jac;
}

Tensor3 fd_second(const std::function<Mat(const Vec&)>& jac, const Vec& x, double h_rel) {
  const double h = h_rel * (1.0 + x.norm());
  const Mat j0 = jac(x);
  Tensor3 out(j0.rows(), x.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x;
    Vec xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Mat d = (jac(xp) - jac(xm)) / (2.0 * h);
    for (Eigen::Index k = 0; k < j0.rows(); ++k) out.slices[k].col(j) = d.row(k).transpose();
  }
  return out;
}

}  // namespace redmap

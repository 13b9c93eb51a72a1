#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "redmap/linops.hpp"

namespace redmap {

/// Third-order array stored as a list of matrices along the first index:
/// t(k, i, j) == slices[k](i, j).
struct Tensor3 {
  std::vector<Mat> slices;

  Tensor3() = default;
  Tensor3(Eigen::Index d0, Eigen::Index d1, Eigen::Index d2)
      : slices(static_cast<std::size_t>(d0), Mat::Zero(d1, d2)) {}

  Eigen::Index dim0() const { return static_cast<Eigen::Index>(slices.size()); }
  Eigen::Index dim1() const { return slices.empty() ? 0 : slices.front().rows(); }
  Eigen::Index dim2() const { return slices.empty() ? 0 : slices.front().cols(); }

  double& operator()(Eigen::Index k, Eigen::Index i, Eigen::Index j) { return slices[static_cast<std::size_t>(k)](i, j); }
  double operator()(Eigen::Index k, Eigen::Index i, Eigen::Index j) const {
    return slices[static_cast<std::size_t>(k)](i, j);
  }

  /// sum_k t[k] * v[k]
  Mat contract_first(const Vec& v) const;
  double max_abs() const;
};

/// Upper bound on the injective norm sup |T(a, b, c)| over unit a, b, c.
/// Exact (spectral norm of the only slice) when dim0 == 1, otherwise
/// sqrt(sum_k ||T[k]||_2^2).
double injective_norm_bound(const Tensor3& t);

/// Inner problem G(x1, u) whose local argmin in u defines an implicit mapping.
/// Derivative conventions, all evaluated at (x1, u):
///   grad_u[k]         = dG/du_k
///   hess_uu(k, l)     = d2G/du_k du_l                      (n2 x n2)
///   hess_x1u(k, i)    = d2G/du_k dx1_i                     (n2 x n1)
///   d3_x1x1u(k, i, j) = d3G/du_k dx1_i dx1_j               (n2 x n1 x n1)
///   d3_x1uu(k, i, l)  = d3G/du_k dx1_i du_l                (n2 x n1 x n2)
///   d3_uuu(k, l, m)   = d3G/du_k du_l du_m                 (n2 x n2 x n2)
struct InnerProblem {
  using VecFn = std::function<Vec(const Vec&, const Vec&)>;
  using MatFn = std::function<Mat(const Vec&, const Vec&)>;
  using TensorFn = std::function<Tensor3(const Vec&, const Vec&)>;

  int n1 = 0;
  int n2 = 0;
  std::function<double(const Vec&, const Vec&)> value;  // optional, diagnostics only
  VecFn grad_u;
  MatFn hess_uu;
  MatFn hess_x1u;
  TensorFn d3_x1x1u;
  TensorFn d3_x1uu;
  TensorFn d3_uuu;
  double newton_tol = 1e-10;
  int newton_max_iter = 100;
  double sigma_floor = 0.0;  // SSOSC demands lambda_min(hess_uu) > sigma_floor

  bool has_third_derivatives() const { return d3_x1x1u && d3_x1uu && d3_uuu; }
};

struct InnerSolveResult {
  Vec u;
  int iters = 0;
  double grad_norm = 0.0;
};

/// Damped Newton on the merit ||grad_u G||^2 (step halving, at most 30 halvings
/// per iteration). Returns the solution in the Newton basin of u0.
/// Throws Errc::InnerDivergence after newton_max_iter iterations.
InnerSolveResult inner_solve(const InnerProblem& p, const Vec& x1, const Vec& u0);

/// Derivatives of psi up to the requested order at one point.
struct MappingJet {
  Vec value;                    // n2
  Mat jacobian;                 // n2 x n1, empty when order < 1
  std::optional<Tensor3> hess;  // n2 x n1 x n1, present when order >= 2
};

/// Psi : R^{n1} -> R^{n2} and the reduction mapping Phi(x1) = (x1, Psi(x1)).
class ReductionMapping {
 public:
  struct Constant {
    Vec x2;
  };
  struct Affine {
    Mat a;  // n2 x n1
    Vec b;  // n2
  };
  struct ClosedForm {
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;
    std::function<Tensor3(const Vec&)> hessian;
  };
  struct ImplicitArgmin {
    std::shared_ptr<const InnerProblem> inner;
    Vec initial_guess;  // used until the warm-start cache is populated
  };
  using Kind = std::variant<Constant, Affine, ClosedForm, ImplicitArgmin>;

  static ReductionMapping constant(int n1, Vec x2);
  static ReductionMapping affine(Mat a, Vec b);
  static ReductionMapping closed_form(int n1, int n2, ClosedForm fns);
  static ReductionMapping implicit_argmin(InnerProblem inner, Vec initial_guess);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double scale_alpha() const { return alpha_; }
  const Kind& kind() const { return kind_; }
  bool is_affine() const;  // Constant or Affine
  const std::string& name() const { return name_; }

  /// Psi_alpha = alpha * Psi; alpha > 0. Does not rescale an inner problem.
  ReductionMapping with_scale(double alpha) const;
  ReductionMapping named(std::string name) const;

  Vec psi(const Vec& x1) const;
  Mat d_psi(const Vec& x1) const;
  Tensor3 d2_psi(const Vec& x1) const;
  Vec phi(const Vec& x1) const;
  Mat d_phi(const Vec& x1) const;

  /// One evaluation of psi and its derivatives up to `order` (0, 1 or 2).
  /// The implicit kind solves its inner problem once per call.
  MappingJet jet(const Vec& x1, int order) const;

  /// The inner solution at x1 (implicit kind only).
  Vec inner_solution(const Vec& x1) const;

 private:
  struct WarmStart {
    std::mutex mu;
    std::optional<Vec> x1;
    std::optional<Vec> u;
  };

  ReductionMapping(int n1, int n2, Kind kind);
  void check_input(const Vec& x1) const;
  Vec solve_inner(const ImplicitArgmin& k, const Vec& x1) const;

  int n1_;
  int n2_;
  Kind kind_;
  double alpha_ = 1.0;
  std::string name_;
  std::shared_ptr<WarmStart> cache_;
};

/// Central-difference helpers (h = 1e-6 (1 + ||x||) for first order,
/// h = 1e-4 (1 + ||x||) for the Jacobian-of-Jacobian second order).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, double h_rel = 1e-6);
Tensor3 fd_second(const std::function<Mat(const Vec&)>& jac, const Vec& x, double h_rel = 1e-4);

}  // namespace redmap

#pragma once

#include <functional>
#include <optional>

#include "redmap/linops.hpp"
#include "redmap/mapping.hpp"

namespace redmap {

/// Twice differentiable f on the split space x = (x1, x2), x1 in R^{n1},
/// x2 in R^{n2}.
struct Objective {
  int n1 = 0;
  int n2 = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  double known_min_value = 0.0;

  int dim() const { return n1 + n2; }
};

struct DerivativeCheck {
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
  bool ok = false;
};

/// Compares gradient to central differences of value and Hessian to central
/// differences of gradient at x: ok iff grad error <= grad_tol and Hessian
/// error <= hess_tol, both relative to (1 + ||analytic||).
DerivativeCheck check_derivatives(const Objective& f, const Vec& x, double grad_tol = 1e-5, double hess_tol = 1e-4);

/// Everything about F = f o Phi at one point x1.
struct ReducedPoint {
  Vec x1;
  Vec x;            // Phi(x1)
  double value;     // F(x1)
  Vec grad_full;    // grad f(Phi(x1))
  Mat hess_full;    // hess f(Phi(x1)), symmetrized
  Mat d_phi;        // (n1 + n2) x n1
  Tensor3 d2_psi;   // n2 x n1 x n1 (only when derivatives of order 2 were asked)
  Vec grad;         // grad F = DPhi^T grad f
  Mat gauss_part;   // DPhi^T hess f DPhi
  Mat correction;   // sum_k D2Psi[k] * df/dx2_k
  Mat hess;         // gauss_part + correction
  Mat metric;       // I + DPsi^T DPsi

  Vec grad_x2() const { return grad_full.tail(grad_full.size() - x1.size()); }
};

/// The pairing of an objective with a reduction mapping.
class ReducedProblem {
 public:
  ReducedProblem(Objective objective, ReductionMapping mapping);

  const Objective& objective() const { return f_; }
  const ReductionMapping& mapping() const { return psi_; }
  int n1() const { return f_.n1; }
  int n2() const { return f_.n2; }

  double f_reduced(const Vec& x1) const;
  Vec grad_reduced(const Vec& x1) const;
  SymMatrix hess_reduced(const Vec& x1) const;
  SymMatrix correction_term(const Vec& x1) const;
  SymMatrix pullback_metric(const Vec& x1) const;
  Extremes metric_extremes(const Vec& x1) const;

  /// Evaluates value, gradient and (order 2) Hessian pieces with one mapping
  /// evaluation. order is 1 or 2.
  ReducedPoint evaluate(const Vec& x1, int order = 2) const;

 private:
  Objective f_;
  ReductionMapping psi_;
};

}  // namespace redmap

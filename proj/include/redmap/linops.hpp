#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>

#include "redmap/error.hpp"

namespace redmap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense symmetric matrix. The stored entries are exactly symmetric:
/// construction replaces the input by (A + A^T) / 2.
class SymMatrix {
 public:
  explicit SymMatrix(const Mat& a);

  static SymMatrix identity(Eigen::Index n);
  static SymMatrix diagonal(const Vec& d);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Mat& mat() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// Frobenius norm.
  double norm() const { return m_.norm(); }

 private:
  Mat m_;
};

struct EigenPairs {
  Vec values;   // ascending
  Mat vectors;  // orthonormal columns, vectors.col(k) pairs with values(k)
};

/// All eigenpairs of a symmetric matrix, eigenvalues ascending.
/// Throws Errc::NonFinite on NaN/Inf input.
EigenPairs sym_eig(const SymMatrix& a);

struct Extremes {
  double min;
  double max;
};

/// Extreme eigenvalues of the pencil (a, b), i.e. the extremal values of
/// y^T a y / y^T b y. Solved by Cholesky reduction b = L L^T followed by
/// sym_eig on L^{-1} a L^{-T}. Throws Errc::NotSPD when
/// lambda_min(b) <= 1e-12 * lambda_max(b).
Extremes gen_eig_extremes(const SymMatrix& a, const SymMatrix& b);

/// Full ascending spectrum of the pencil (a, b).
Vec gen_eig_values(const SymMatrix& a, const SymMatrix& b);

/// Direct Cholesky solve of a z = rhs. Throws Errc::NotSPD.
Vec spd_solve(const SymMatrix& a, const Vec& rhs);

/// Throws Errc::NotSPD unless a is numerically positive definite.
void require_spd(const SymMatrix& a, const char* what);

using LinearOperator = std::function<Vec(const Vec&)>;

struct CgResult {
  Vec solution;
  int iters = 0;
  bool converged = false;
  double rel_residual = 0.0;
};

/// Unpreconditioned conjugate gradients for an SPD operator, starting from
/// zero. Stops once ||A z - rhs|| <= rel_tol * ||rhs||. Not converging within
/// max_iter is reported through `converged`, not thrown.
CgResult cg_solve(const LinearOperator& apply_a, const Vec& rhs, double rel_tol, int max_iter);

/// Largest singular value (spectral norm) of a general matrix.
double spectral_norm(const Mat& a);

/// Orthonormal basis of the column space of a (full column rank expected).
/// Throws Errc::DegenerateTangent when rank(a) < cols(a).
Mat orthonormal_basis(const Mat& a);

/// Orthonormal basis of the orthogonal complement of col(a) in R^{rows(a)}.
/// a may have zero columns.
Mat orthogonal_complement(const Mat& a);

/// Orthonormal basis of the null space of a (columns), rank decided with
/// relative tolerance `rel_tol` on singular values.
Mat null_space(const Mat& a, double rel_tol = 1e-10);

bool all_finite(const Mat& a);

}  // namespace redmap

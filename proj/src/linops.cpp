#include "redmap/linops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace redmap {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::NotSPD: return "NotSPD";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::InnerDivergence: return "InnerDivergence";
    case Errc::SSOSCViolation: return "SSOSCViolation";
    case Errc::MissingThirdDerivatives: return "MissingThirdDerivatives";
    case Errc::WrongMappingKind: return "WrongMappingKind";
    case Errc::DegenerateTangent: return "DegenerateTangent";
    case Errc::NotCritical: return "NotCritical";
    case Errc::KernelMismatch: return "KernelMismatch";
    case Errc::EmptySample: return "EmptySample";
    case Errc::LineSearchStall: return "LineSearchStall";
    case Errc::InvalidParam: return "InvalidParam";
    case Errc::NoSolutionSet: return "NoSolutionSet";
    case Errc::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

bool all_finite(const Mat& a) { return a.allFinite(); }

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw Error(Errc::DimensionMismatch,
                "SymMatrix needs a nonempty square matrix, got " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()));
  }
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Mat::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vec& d) { return SymMatrix(Mat(d.asDiagonal())); }

EigenPairs sym_eig(const SymMatrix& a) {
  if (!all_finite(a.mat())) throw Error(Errc::NonFinite, "sym_eig input has NaN/Inf entries");
  // Tridiagonal QR; single threaded, so bit-reproducible for fixed input.
  Eigen::SelfAdjointEigenSolver<Mat> solver(a.mat(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error(Errc::NoConvergence, "symmetric QR failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

// Lower Cholesky factor of an SPD matrix with the relative eigenvalue guard.
Eigen::LLT<Mat> guarded_cholesky(const SymMatrix& b, const char* what) {
  require_spd(b, what);
  Eigen::LLT<Mat> llt(b.mat());
  if (llt.info() != Eigen::Success) throw Error(Errc::NotSPD, std::string(what) + ": Cholesky breakdown");
  return llt;
}

}  // namespace

void require_spd(const SymMatrix& a, const char* what) {
  if (!all_finite(a.mat())) throw Error(Errc::NonFinite, std::string(what) + " has NaN/Inf entries");
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(a.mat(), Eigen::EigenvaluesOnly).eigenvalues();
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
    throw Error(Errc::NotSPD, std::string(what) + " is not positive definite (lambda_min=" +
                                  std::to_string(lmin) + ", lambda_max=" + std::to_string(lmax) + ")");
  }
}

Vec gen_eig_values(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw Error(Errc::DimensionMismatch, "gen_eig: pencil dimensions differ");
  if (!all_finite(a.mat())) throw Error(Errc::NonFinite, "gen_eig: a has NaN/Inf entries");
  const auto llt = guarded_cholesky(b, "gen_eig: b");
  const auto l = llt.matrixL();
  // C = L^{-1} a L^{-T}
  Mat c = l.solve(a.mat());
  c = l.solve(c.transpose()).transpose();
  return sym_eig(SymMatrix(c)).values;
}

Extremes gen_eig_extremes(const SymMatrix& a, const SymMatrix& b) {
  const Vec v = gen_eig_values(a, b);
  return {v(0), v(v.size() - 1)};
}

Vec spd_solve(const SymMatrix& a, const Vec& rhs) {
  if (rhs.size() != a.dim()) throw Error(Errc::DimensionMismatch, "spd_solve: rhs size");
  if (!rhs.allFinite()) throw Error(Errc::NonFinite, "spd_solve: rhs has NaN/Inf");
  return guarded_cholesky(a, "spd_solve: matrix").solve(rhs);
}

CgResult cg_solve(const LinearOperator& apply_a, const Vec& rhs, double rel_tol, int max_iter) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw Error(Errc::InvalidParam, "cg_solve: rel_tol must lie in (0,1)");
  if (max_iter < 1) throw Error(Errc::InvalidParam, "cg_solve: max_iter must be >= 1");

  CgResult out;
  out.solution = Vec::Zero(rhs.size());
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    out.converged = true;
    return out;
  }

  Vec r = rhs;
  Vec p = r;
  double rr = r.squaredNorm();
  const double target = rel_tol * rhs_norm;

  while (out.iters < max_iter) {
    const Vec q = apply_a(p);
    if (!q.allFinite()) throw Error(Errc::NonFinite, "cg_solve: operator produced NaN/Inf");
    const double pq = p.dot(q);
    if (!(pq > 0.0)) throw Error(Errc::NotSPD, "cg_solve: operator is not positive definite");
    const double step = rr / pq;
    out.solution += step * p;
    r -= step * q;
    ++out.iters;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= target) {
      rr = rr_new;
      out.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  // The recursive residual drifts; report the true one.
  out.rel_residual = (apply_a(out.solution) - rhs).norm() / rhs_norm;
  out.converged = out.converged && out.rel_residual <= 10.0 * rel_tol;
  return out;
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

Mat orthonormal_basis(const Mat& a) {
  if (a.cols() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  const double tol = 1e-12 * std::max(1.0, s(0)) * static_cast<double>(std::max(a.rows(), a.cols()));
  if (s(s.size() - 1) <= tol) throw Error(Errc::DegenerateTangent, "matrix is column-rank deficient");
  return svd.matrixU();
}

Mat null_space(const Mat& a, double rel_tol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double scale = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * std::max(scale, 1e-300)) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

Mat orthogonal_complement(const Mat& a) {
  if (a.cols() == 0) return Mat::Identity(a.rows(), a.rows());
  return null_space(a.transpose());
}

}  // namespace redmap

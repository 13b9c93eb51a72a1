#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "redmap/mapping.hpp"

// Seeded instance generators and finite-difference oracles for the tests.
// Deliberately independent of the library's own builders and FD helpers.
namespace testkit {

using redmap::Mat;
using redmap::Tensor3;
using redmap::Vec;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vec vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Mat mat(Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }

  Mat symmetric(Eigen::Index n) {
    const Mat g = mat(n, n);
    return 0.5 * (g + g.transpose());
  }

  // Well conditioned SPD: G G^T / n + shift I.
  Mat spd(Eigen::Index n, double shift = 1.0) {
    const Mat g = mat(n, n);
    return g * g.transpose() / static_cast<double>(n) + shift * Mat::Identity(n, n);
  }

  // Gaussian n x k with k < n has full column rank almost surely; retried otherwise.
  Mat full_rank(Eigen::Index n, Eigen::Index k) {
    for (;;) {
      Mat b = mat(n, k);
      Eigen::JacobiSVD<Mat> svd(b);
      if (svd.singularValues()(k - 1) > 1e-3 * svd.singularValues()(0)) return b;
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double step_for(const Vec& x, double rel) { return rel * (1.0 + x.norm()); }

// Central difference Jacobian of a vector function: column j = d fn / d x_j.
inline Mat fd_jac(const std::function<Vec(const Vec&)>& fn, const Vec& x, double rel = 1e-6) {
  const double h = step_for(x, rel);
  const Vec f0 = fn(x);
  Mat j(f0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return j;
}

inline Vec fd_grad(const std::function<double(const Vec&)>& fn, const Vec& x, double rel = 1e-6) {
  const double h = step_for(x, rel);
  Vec g(x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    g(c) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return g;
}

// t(k, i, j) = d J(k, i) / d x_j from central differences of the Jacobian.
inline Tensor3 fd_tensor(const std::function<Mat(const Vec&)>& jac, const Vec& x, double rel = 1e-4) {
  const double h = step_for(x, rel);
  const Mat j0 = jac(x);
  Tensor3 t(j0.rows(), j0.cols(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const Mat d = (jac(xp) - jac(xm)) / (2.0 * h);
    for (Eigen::Index k = 0; k < j0.rows(); ++k)
      for (Eigen::Index i = 0; i < j0.cols(); ++i) t(k, i, c) = d(k, i);
  }
  return t;
}

inline double tensor_diff(const Tensor3& a, const Tensor3& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.dim0(); ++k) s += (a.slices[k] - b.slices[k]).squaredNorm();
  return std::sqrt(s);
}

inline double tensor_norm(const Tensor3& a) {
  double s = 0.0;
  for (const auto& m : a.slices) s += m.squaredNorm();
  return std::sqrt(s);
}

// Closed-form spectrum of a symmetric 2x2 matrix.
inline std::pair<double, double> eig2(double a, double b, double d) {
  const double mean = 0.5 * (a + d);
  const double r = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return {mean - r, mean + r};
}

// Smallest and largest generalized eigenvalues of (a, b), b SPD.
inline std::pair<double, double> gen_extremes_oracle(const Mat& a, const Mat& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(a, b, Eigen::EigenvaluesOnly);
  const Vec& v = es.eigenvalues();
  return {v.minCoeff(), v.maxCoeff()};
}

// Root of a monotone scalar function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
  double glo = g(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace testkit

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "redmap/spectral.hpp"

namespace redmap {

/// Randomized theorem-inequality families.
enum class Family { Affine, Nonlinear, MorseBott, Interlacing, Correction };

std::string_view to_string(Family f);
const std::vector<Family>& all_families();

/// splitmix64 of (base, family, index): the seed that reproduces one instance.
std::uint64_t instance_seed(std::uint64_t base, Family f, int index);

struct InstanceOutcome {
  bool skipped = false;  // the theorem's hypotheses do not hold for this draw
  bool passed = false;
  std::string detail;
};

/// corrupt_hessian perturbs the Hessian handed to the checks (negative-path hook).
InstanceOutcome run_instance(Family f, std::uint64_t seed, bool corrupt_hessian = false);

struct FamilyResult {
  Family family = Family::Affine;
  int instances = 0;
  int passed = 0;
  int skipped = 0;
  int failed = 0;
  std::optional<int> first_failure_index;
  std::uint64_t first_failure_seed = 0;
  std::string first_failure_detail;
};

struct PropOptions {
  std::uint64_t seed = 0;
  int count = 100;
  bool corrupt_hessian = false;
  bool parallel = true;  // instances run concurrently; results do not depend on it
};

std::vector<FamilyResult> run_propcheck(const PropOptions& opts);

// Instance builders, shared with the test suites.

/// Q diag(lambda) Q^T with Q Haar-orthogonal and lambda uniform in [lo, hi].
Mat random_symmetric(int n, double lo, double hi, std::mt19937_64& rng);
Mat random_gaussian(int rows, int cols, std::mt19937_64& rng);

/// 1/2 (x - x_star)^T h (x - x_star) + min_value on the split n1 + n2.
Objective quadratic_objective(int n1, Mat h, Vec x_star, double min_value = 0.0);

/// Psi(x) = a x + b + c .* sin(w x), closed form with exact derivatives.
ReductionMapping wavy_mapping(Mat a, Vec b, Vec c, Mat w);

/// G(x, u) = sum_k 1/2 (1 + (W x)_k^2) u_k^2 + 1/4 u_k^4 - u_k (V x)_k; strongly
/// convex in u with all third derivatives supplied. W, V are n2 x n1.
InnerProblem quartic_inner_problem(Mat w, Mat v);

struct MorseBottInstance {
  Objective objective;
  ReductionMapping mapping;
  Vec minimiser;  // x1 with Phi(x1) on S
  Mat tangent;    // orthonormal basis of T S, contained in col(DPhi)
  Mat hessian;
};

/// 6-dimensional PSD quadratic whose kernel (dimension 1 or 2) is the tangent
/// of its minimiser set, with a 3-dimensional affine reduction through it.
MorseBottInstance morse_bott_instance(std::uint64_t seed);

}  // namespace redmap

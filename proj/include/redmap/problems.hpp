#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redmap/reduced.hpp"

namespace redmap {

/// Minimiser set of a built-in problem.
struct SolutionSet {
  std::string description;
  std::function<double(const Vec&)> distance;      // Euclidean dist(x, S)
  std::function<Vec(const Vec&)> nearest;           // a closest point of S
  std::function<Mat(const Vec&)> tangent;           // basis of T_x S at x in S (n x d, d may be 0)
  std::vector<Vec> representatives;                 // points of S used for sanity checks
};

struct ProblemSpec {
  std::string name;
  std::map<std::string, double> params;
  Objective objective;
  std::vector<ReductionMapping> mappings;  // each carries its name
  std::optional<SolutionSet> solution;
  std::optional<Mat> coupling;  // K of the high-dimensional problems

  /// Throws Errc::InvalidParam for an unknown name.
  const ReductionMapping& mapping(const std::string& name) const;
  std::vector<std::string> mapping_names() const;
  ReducedProblem reduced(const std::string& mapping_name) const;
};

/// f = x1^2 + M (x2 - x1)^2 with mappings "linear" (x2 = x1), "fixed"
/// (x2 = 0) and "nonlinear" (x2 = x1 - 2 sin x1).
ProblemSpec make_quad2d(double m_param);

/// f = phi(x1) + (x2 - sin x1)^2, phi the flat-bottom quartic vanishing on
/// [a, b]. Mappings "sine", "sine_implicit" (argmin of (u - sin x1)^2),
/// "zero" and "identity".
ProblemSpec make_flat_quartic_sine(double a, double b);

/// 1/2 |x|^2 + 1/2 |y|^2 + lambda/2 |y - K x|^2 with mapping "linear" (y = K x).
ProblemSpec make_highdim_quadratic(int n, double lambda, std::uint64_t seed);

/// 1/2 |x|^2 + 1/2 |y|^2 + lambda/2 |y - alpha tanh(K x)|^2 with mapping
/// "tanh" (y = alpha tanh(K x)).
ProblemSpec make_highdim_tanh(int n, double lambda, double alpha, std::uint64_t seed);

/// n x n matrix of i.i.d. N(0, 1) / sqrt(n) entries, filled row by row.
Mat gaussian_coupling(int n, std::uint64_t seed);

/// Builds a problem by its CLI name (quad2d, flat-quartic-sine, quad-hd,
/// tanh-hd). Missing params take defaults; unknown names or params throw
/// InvalidParam. The seed only matters for the high-dimensional problems.
ProblemSpec make_problem(const std::string& name, const std::map<std::string, double>& params,
                         std::uint64_t seed = 0);
const std::vector<std::string>& problem_names();

/// Throws Errc::NoSolutionSet when the spec has none.
double distance_to_solution(const ProblemSpec& spec, const Vec& x);

/// kappa = y'' / (1 + y'^2)^{3/2} of a plane curve (t, y(t)).
double plane_curvature(double d1, double d2);

/// Finite-difference validation of gradient and Hessian at `points` seeded
/// random points of the unit cube. Throws Errc::InvalidParam on failure.
void validate_derivatives(const Objective& f, int points = 20, std::uint64_t seed = 0x5eed);

}  // namespace redmap

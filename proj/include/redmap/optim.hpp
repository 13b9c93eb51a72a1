#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "redmap/reduced.hpp"

namespace redmap {

enum class Method { GD_full, GD_reduced, GeoPrecGD };

struct FixedStep {
  double eta = 1.0;
};

struct Armijo {
  double c1 = 1e-4;
  double shrink = 0.5;
  double eta0 = 1.0;
};

using StepRule = std::variant<FixedStep, Armijo>;

enum class MetricSolverKind { Direct, Cg, Woodbury };

struct MetricSolver {
  MetricSolverKind kind = MetricSolverKind::Direct;
  double cg_rel_tol = 1e-10;
  int cg_max_iter = 0;  // 0 means n1
};

struct SolverConfig {
  Method method = Method::GeoPrecGD;
  StepRule step = Armijo{};
  double grad_tol = 1e-8;
  int max_iter = 1000;  // 0 is allowed: only the initial record is produced
  MetricSolver metric;
};

/// Throws Errc::InvalidParam when a parameter is out of range.
void validate(const SolverConfig& cfg);

std::string_view to_string(Method m);
/// Accepts the names printed by to_string(Method). Throws Errc::InvalidParam.
Method parse_method(std::string_view name);

inline constexpr int kMaxShrinks = 60;

struct GeoStep {
  Vec x1_next;
  double step = 0.0;
  int metric_iters = 0;
  Vec direction;  // R^{-1} grad F
};

/// One geometrically preconditioned step x1 - eta R^{-1} grad F.
GeoStep step_geoprec(const ReducedProblem& p, const Vec& x1, const SolverConfig& cfg);

struct GdStep {
  Vec x_next;
  double step = 0.0;
};

GdStep step_gd(const std::function<double(const Vec&)>& value_fn, const std::function<Vec(const Vec&)>& grad_fn,
               const Vec& x, const SolverConfig& cfg);

/// R^{-1} g for R = I + DPsi^T DPsi without forming R^{-1}. Uses
/// R^{-1} = I - P/2 when P = DPsi^T DPsi is an orthogonal projection, and the
/// Woodbury identity I - DPsi^T (I + DPsi DPsi^T)^{-1} DPsi otherwise.
Vec woodbury_apply(const ReducedProblem& p, const Vec& x1, const Vec& g);

struct TraceRecord {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  std::int64_t elapsed_ns = 0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  bool converged = false;
  Vec final_point;
  std::optional<Errc> error;  // step failure that stopped the run
  std::string error_message;
};

struct RunOptions {
  bool record_time = false;  // elapsed_ns stays 0 otherwise, keeping traces byte-stable
  /// Called before each GeoPrecGD step with the current x1 and the search direction.
  std::function<void(const Vec& x1, const Vec& direction)> on_geoprec_step;
};

/// GD_full iterates on f from a full-space start (n1 + n2 entries);
/// GD_reduced and GeoPrecGD iterate on F from an x1 start.
SolverTrace run(const ReducedProblem& p, const Vec& start, const SolverConfig& cfg, const RunOptions& opts = {});

/// Shortest round-trip decimal form.
std::string format_double(double v);

inline constexpr const char* kTraceCsvHeader = "iter,f_value,grad_norm,step_size,elapsed_ns";

std::string trace_csv(const SolverTrace& trace);

}  // namespace redmap

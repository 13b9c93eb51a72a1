#include "redmap/optim.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

namespace redmap {

void validate(const SolverConfig& cfg) {
  if (const auto* f = std::get_if<FixedStep>(&cfg.step)) {
    if (!(f->eta > 0.0) || !std::isfinite(f->eta)) throw Error(Errc::InvalidParam, "fixed step eta must be > 0");
  } else {
    const auto& a = std::get<Armijo>(cfg.step);
    if (!(a.c1 > 0.0 && a.c1 < 1.0)) throw Error(Errc::InvalidParam, "armijo c1 must lie in (0,1)");
    if (!(a.shrink > 0.0 && a.shrink < 1.0)) throw Error(Errc::InvalidParam, "armijo shrink must lie in (0,1)");
    if (!(a.eta0 > 0.0) || !std::isfinite(a.eta0)) throw Error(Errc::InvalidParam, "armijo eta0 must be > 0");
  }
  if (!(cfg.grad_tol > 0.0)) throw Error(Errc::InvalidParam, "grad_tol must be > 0");
  if (cfg.max_iter < 0) throw Error(Errc::InvalidParam, "max_iter must be >= 0");
  if (cfg.metric.kind == MetricSolverKind::Cg) {
    if (!(cfg.metric.cg_rel_tol > 0.0 && cfg.metric.cg_rel_tol < 1.0)) {
      throw Error(Errc::InvalidParam, "cg rel_tol must lie in (0,1)");
    }
    if (cfg.metric.cg_max_iter < 0) throw Error(Errc::InvalidParam, "cg max_iter must be >= 0");
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::GD_full: return "GD_full";
    case Method::GD_reduced: return "GD_reduced";
    case Method::GeoPrecGD: return "GeoPrecGD";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::GD_full, Method::GD_reduced, Method::GeoPrecGD}) {
    if (name == to_string(m)) return m;
  }
  throw Error(Errc::InvalidParam, "unknown method '" + std::string(name) + "'");
}

namespace {

using ValueFn = std::function<double(const Vec&)>;

// Step length along -d from x. slope = g^T d > 0.
double choose_step(const ValueFn& value, const Vec& x, double fx, const Vec& d, double slope, const StepRule& rule) {
  if (const auto* f = std::get_if<FixedStep>(&rule)) return f->eta;
  const auto& a = std::get<Armijo>(rule);
  double eta = a.eta0;
  for (int shrinks = 0; shrinks <= kMaxShrinks; ++shrinks) {
    double ft = std::numeric_limits<double>::quiet_NaN();
    try {
      ft = value(x - eta * d);
    } catch (const Error&) {
      // e.g. the inner problem diverged at the trial point: reject it
    }
    if (std::isfinite(ft) && fx - ft >= a.c1 * eta * slope) return eta;
    eta *= a.shrink;
  }
  throw Error(Errc::LineSearchStall, "no sufficient decrease after " + std::to_string(kMaxShrinks) + " shrinks");
}

struct MetricSolve {
  Vec z;
  int iters = 0;
};

MetricSolve solve_metric(const ReducedProblem& p, const Vec& x1, const Mat& metric, const Vec& g,
                         const MetricSolver& cfg) {
  switch (cfg.kind) {
    case MetricSolverKind::Direct:
      return {spd_solve(SymMatrix(metric), g), 0};
    case MetricSolverKind::Woodbury:
      return {woodbury_apply(p, x1, g), 0};
    case MetricSolverKind::Cg: {
      const int max_iter = cfg.cg_max_iter > 0 ? cfg.cg_max_iter : std::max(1, p.n1());
      const CgResult r = cg_solve([&](const Vec& v) { return Vec(metric * v); }, g, cfg.cg_rel_tol, max_iter);
      if (r.converged) return {r.solution, r.iters};
      return {spd_solve(SymMatrix(metric), g), r.iters};
    }
  }
  throw Error(Errc::InvalidParam, "unknown metric solver");
}

GeoStep geoprec_from(const ReducedProblem& p, const ReducedPoint& at, const SolverConfig& cfg) {
  GeoStep out;
  if (at.grad.squaredNorm() == 0.0) {
    out.x1_next = at.x1;
    out.direction = Vec::Zero(at.x1.size());
    return out;
  }
  MetricSolve ms = solve_metric(p, at.x1, at.metric, at.grad, cfg.metric);
  out.direction = std::move(ms.z);
  out.metric_iters = ms.iters;
  const double slope = at.grad.dot(out.direction);
  out.step = choose_step([&](const Vec& y) { return p.f_reduced(y); }, at.x1, at.value, out.direction, slope,
                         cfg.step);
  out.x1_next = at.x1 - out.step * out.direction;
  return out;
}

GdStep gd_from(const ValueFn& value, const Vec& x, double fx, const Vec& g, const SolverConfig& cfg) {
  if (g.squaredNorm() == 0.0) return {x, 0.0};
  const double eta = choose_step(value, x, fx, g, g.squaredNorm(), cfg.step);
  return {x - eta * g, eta};
}

}  // namespace

GeoStep step_geoprec(const ReducedProblem& p, const Vec& x1, const SolverConfig& cfg) {
  if (cfg.method != Method::GeoPrecGD) throw Error(Errc::InvalidParam, "step_geoprec needs method GeoPrecGD");
  validate(cfg);
  return geoprec_from(p, p.evaluate(x1, 1), cfg);
}

GdStep step_gd(const std::function<double(const Vec&)>& value_fn, const std::function<Vec(const Vec&)>& grad_fn,
               const Vec& x, const SolverConfig& cfg) {
  if (cfg.method == Method::GeoPrecGD) throw Error(Errc::InvalidParam, "step_gd needs method GD_full or GD_reduced");
  validate(cfg);
  return gd_from(value_fn, x, value_fn(x), grad_fn(x), cfg);
}

Vec woodbury_apply(const ReducedProblem& p, const Vec& x1, const Vec& g) {
  if (g.size() != p.n1()) throw Error(Errc::DimensionMismatch, "woodbury_apply: g has wrong size");
  const Mat j = p.mapping().d_psi(x1);  // n2 x n1
  const Mat proj = j.transpose() * j;
  if ((proj * proj - proj).norm() <= 1e-10) return g - 0.5 * (j.transpose() * (j * g));
  const Mat small = Mat::Identity(j.rows(), j.rows()) + j * j.transpose();
  return g - j.transpose() * spd_solve(SymMatrix(small), j * g);
}

SolverTrace run(const ReducedProblem& p, const Vec& start, const SolverConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  if (!start.allFinite()) throw Error(Errc::NonFinite, "start point is not finite");
  const bool full = cfg.method == Method::GD_full;
  const int expected = full ? p.objective().dim() : p.n1();
  if (start.size() != expected) {
    throw Error(Errc::DimensionMismatch, "start has " + std::to_string(start.size()) + " entries, expected " +
                                             std::to_string(expected));
  }

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed = [&]() -> std::int64_t {
    if (!opts.record_time) return 0;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  };

  const Objective& f = p.objective();
  SolverTrace trace;
  Vec x = start;
  double fx = 0.0;
  Vec g;
  std::optional<ReducedPoint> at;
  const auto evaluate = [&] {
    if (full) {
      fx = f.value(x);
      g = f.gradient(x);
    } else {
      at = p.evaluate(x, 1);
      fx = at->value;
      g = at->grad;
    }
  };

  evaluate();
  trace.records.push_back({0, fx, g.norm(), 0.0, elapsed()});
  trace.converged = g.norm() <= cfg.grad_tol;

  for (int it = 1; it <= cfg.max_iter && !trace.converged; ++it) {
    double step = 0.0;
    try {
      if (cfg.method == Method::GeoPrecGD) {
        GeoStep s = geoprec_from(p, *at, cfg);
        if (opts.on_geoprec_step) opts.on_geoprec_step(x, s.direction);
        x = std::move(s.x1_next);
        step = s.step;
      } else if (full) {
        GdStep s = gd_from(f.value, x, fx, g, cfg);
        x = std::move(s.x_next);
        step = s.step;
      } else {
        GdStep s = gd_from([&](const Vec& y) { return p.f_reduced(y); }, x, fx, g, cfg);
        x = std::move(s.x_next);
        step = s.step;
      }
      evaluate();
    } catch (const Error& e) {
      trace.error = e.code();
      trace.error_message = e.what();
      break;
    }
    trace.records.push_back({it, fx, g.norm(), step, elapsed()});
    trace.converged = g.norm() <= cfg.grad_tol;
  }
  trace.final_point = x;
  return trace;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const SolverTrace& trace) {
  std::ostringstream os;
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.iter << ',' << format_double(r.value) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.step) << ',' << r.elapsed_ns << '\n';
  }
  return os.str();
}

}  // namespace redmap

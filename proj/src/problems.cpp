#include "redmap/problems.hpp"

#include <cmath>
#include <random>

namespace redmap {

const ReductionMapping& ProblemSpec::mapping(const std::string& mapping_name) const {
  for (const auto& m : mappings) {
    if (m.name() == mapping_name) return m;
  }
  std::string known;
  for (const auto& m : mappings) known += (known.empty() ? "" : ", ") + m.name();
  throw Error(Errc::InvalidParam, "problem '" + name + "' has no mapping '" + mapping_name + "' (known: " + known + ")");
}

std::vector<std::string> ProblemSpec::mapping_names() const {
  std::vector<std::string> out;
  for (const auto& m : mappings) out.push_back(m.name());
  return out;
}

ReducedProblem ProblemSpec::reduced(const std::string& mapping_name) const {
  return ReducedProblem(objective, mapping(mapping_name));
}

void validate_derivatives(const Objective& f, int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < points; ++i) {
    Vec x(f.dim());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = unit(rng);
    const DerivativeCheck c = check_derivatives(f, x);
    if (!c.ok) {
      throw Error(Errc::InvalidParam, "derivative check failed (grad err " + std::to_string(c.grad_rel_err) +
                                          ", hess err " + std::to_string(c.hess_rel_err) + ")");
    }
  }
}

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }
Mat scalar_mat(double v) { return Mat::Constant(1, 1, v); }
Tensor3 scalar_tensor(double v) {
  Tensor3 t(1, 1, 1);
  t(0, 0, 0) = v;
  return t;
}

SolutionSet point_solution(int n) {
  SolutionSet s;
  s.description = "{0}";
  s.distance = [](const Vec& x) { return x.norm(); };
  s.nearest = [n](const Vec&) { return Vec(Vec::Zero(n)); };
  s.tangent = [n](const Vec&) { return Mat(n, 0); };
  s.representatives = {Vec::Zero(n)};
  return s;
}

void check_solution(const ProblemSpec& spec) {
  if (!spec.solution) return;
  for (const Vec& x : spec.solution->representatives) {
    const double g = spec.objective.gradient(x).norm();
    if (g > 1e-10) throw Error(Errc::InvalidParam, spec.name + ": solution point has gradient norm " + std::to_string(g));
  }
}

ProblemSpec finish(ProblemSpec spec) {
  validate_derivatives(spec.objective);
  check_solution(spec);
  return spec;
}

}  // namespace

ProblemSpec make_quad2d(double m_param) {
  if (!(m_param > 0.0) || !std::isfinite(m_param)) throw Error(Errc::InvalidParam, "quad2d: M must be > 0");
  const double m = m_param;
  ProblemSpec spec;
  spec.name = "quad2d";
  spec.params = {{"M", m}};

  Objective& f = spec.objective;
  f.n1 = 1;
  f.n2 = 1;
  f.value = [m](const Vec& x) { return x(0) * x(0) + m * (x(1) - x(0)) * (x(1) - x(0)); };
  f.gradient = [m](const Vec& x) {
    Vec g(2);
    g << 2.0 * x(0) + 2.0 * m * (x(0) - x(1)), 2.0 * m * (x(1) - x(0));
    return g;
  };
  f.hessian = [m](const Vec&) {
    Mat h(2, 2);
    h << 2.0 + 2.0 * m, -2.0 * m, -2.0 * m, 2.0 * m;
    return h;
  };

  spec.mappings.push_back(ReductionMapping::affine(Mat::Identity(1, 1), Vec::Zero(1)).named("linear"));
  spec.mappings.push_back(ReductionMapping::constant(1, Vec::Zero(1)).named("fixed"));
  ReductionMapping::ClosedForm wavy{
      [](const Vec& x) { return scalar(x(0) - 2.0 * std::sin(x(0))); },
      [](const Vec& x) { return scalar_mat(1.0 - 2.0 * std::cos(x(0))); },
      [](const Vec& x) { return scalar_tensor(2.0 * std::sin(x(0))); }};
  spec.mappings.push_back(ReductionMapping::closed_form(1, 1, std::move(wavy)).named("nonlinear"));

  spec.solution = point_solution(2);
  return finish(std::move(spec));
}

ProblemSpec make_flat_quartic_sine(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw Error(Errc::InvalidParam, "flat-quartic-sine: need a < b");
  ProblemSpec spec;
  spec.name = "flat-quartic-sine";
  spec.params = {{"a", a}, {"b", b}};

  // Offset from the flat interval; zero inside it.
  const auto off = [a, b](double t) { return t < a ? t - a : (t > b ? t - b : 0.0); };
  const auto phi = [off](double t) { return std::pow(off(t), 4); };
  const auto dphi = [off](double t) { return 4.0 * std::pow(off(t), 3); };
  const auto ddphi = [off](double t) { return 12.0 * off(t) * off(t); };

  Objective& f = spec.objective;
  f.n1 = 1;
  f.n2 = 1;
  f.value = [phi](const Vec& x) {
    const double r = x(1) - std::sin(x(0));
    return phi(x(0)) + r * r;
  };
  f.gradient = [dphi](const Vec& x) {
    const double r = x(1) - std::sin(x(0));
    Vec g(2);
    g << dphi(x(0)) - 2.0 * r * std::cos(x(0)), 2.0 * r;
    return g;
  };
  f.hessian = [ddphi](const Vec& x) {
    const double s = std::sin(x(0));
    const double c = std::cos(x(0));
    const double r = x(1) - s;
    Mat h(2, 2);
    h << ddphi(x(0)) + 2.0 * r * s + 2.0 * c * c, -2.0 * c, -2.0 * c, 2.0;
    return h;
  };

  ReductionMapping::ClosedForm sine{[](const Vec& x) { return scalar(std::sin(x(0))); },
                                    [](const Vec& x) { return scalar_mat(std::cos(x(0))); },
                                    [](const Vec& x) { return scalar_tensor(-std::sin(x(0))); }};
  spec.mappings.push_back(ReductionMapping::closed_form(1, 1, std::move(sine)).named("sine"));

  // argmin_u (u - sin x1)^2
  InnerProblem g;
  g.n1 = 1;
  g.n2 = 1;
  g.value = [](const Vec& x, const Vec& u) { return std::pow(u(0) - std::sin(x(0)), 2); };
  g.grad_u = [](const Vec& x, const Vec& u) { return scalar(2.0 * (u(0) - std::sin(x(0)))); };
  g.hess_uu = [](const Vec&, const Vec&) { return scalar_mat(2.0); };
  g.hess_x1u = [](const Vec& x, const Vec&) { return scalar_mat(-2.0 * std::cos(x(0))); };
  g.d3_x1x1u = [](const Vec& x, const Vec&) { return scalar_tensor(2.0 * std::sin(x(0))); };
  g.d3_x1uu = [](const Vec&, const Vec&) { return scalar_tensor(0.0); };
  g.d3_uuu = [](const Vec&, const Vec&) { return scalar_tensor(0.0); };
  spec.mappings.push_back(ReductionMapping::implicit_argmin(std::move(g), Vec::Zero(1)).named("sine_implicit"));

  spec.mappings.push_back(ReductionMapping::constant(1, Vec::Zero(1)).named("zero"));
  spec.mappings.push_back(ReductionMapping::affine(Mat::Identity(1, 1), Vec::Zero(1)).named("identity"));

  // S = {(t, sin t) : t in [a, b]}
  const auto closest_t = [a, b](const Vec& x) {
    const auto d2 = [&](double t) {
      const double dx = x(0) - t;
      const double dy = x(1) - std::sin(t);
      return dx * dx + dy * dy;
    };
    constexpr int kGrid = 2000;
    const double h = (b - a) / kGrid;
    int best = 0;
    for (int i = 1; i <= kGrid; ++i) {
      if (d2(a + i * h) < d2(a + best * h)) best = i;
    }
    double lo = a + std::max(best - 1, 0) * h;
    double hi = a + std::min(best + 1, kGrid) * h;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    while (hi - lo > 1e-10) {
      if (d2(c) < d2(d)) {
        hi = d;
      } else {
        lo = c;
      }
      c = hi - inv_phi * (hi - lo);
      d = lo + inv_phi * (hi - lo);
    }
    double t = 0.5 * (lo + hi);
    // The minimum may sit at a grid endpoint the bracket excluded.
    for (double e : {a, b}) {
      if (d2(e) < d2(t)) t = e;
    }
    return t;
  };
  SolutionSet s;
  s.description = "{(t, sin t) : t in [a, b]}";
  s.nearest = [closest_t](const Vec& x) {
    const double t = closest_t(x);
    Vec p(2);
    p << t, std::sin(t);
    return p;
  };
  s.distance = [nearest = s.nearest](const Vec& x) { return (x - nearest(x)).norm(); };
  s.tangent = [](const Vec& x) {
    Mat t(2, 1);
    t << 1.0, std::cos(x(0));
    return Mat(t / t.norm());
  };
  for (double t : {a, 0.5 * (a + b), b}) {
    Vec p(2);
    p << t, std::sin(t);
    s.representatives.push_back(p);
  }
  spec.solution = std::move(s);
  return finish(std::move(spec));
}

Mat gaussian_coupling(int n, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidParam, "coupling size must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Mat k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k(i, j) = scale * normal(rng);
  }
  return k;
}

ProblemSpec make_highdim_quadratic(int n, double lambda, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidParam, "quad-hd: n must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::InvalidParam, "quad-hd: lambda must be > 0");
  const Mat k = gaussian_coupling(n, seed);
  ProblemSpec spec;
  spec.name = "quad-hd";
  spec.params = {{"n", n}, {"lambda", lambda}, {"seed", static_cast<double>(seed)}};
  spec.coupling = k;

  Objective& f = spec.objective;
  f.n1 = n;
  f.n2 = n;
  f.value = [k, n, lambda](const Vec& z) {
    const auto x = z.head(n);
    const auto y = z.tail(n);
    return 0.5 * x.squaredNorm() + 0.5 * y.squaredNorm() + 0.5 * lambda * (y - k * x).squaredNorm();
  };
  f.gradient = [k, n, lambda](const Vec& z) {
    const Vec x = z.head(n);
    const Vec y = z.tail(n);
    const Vec r = y - k * x;
    Vec g(2 * n);
    g << x - lambda * k.transpose() * r, y + lambda * r;
    return g;
  };
  f.hessian = [k, n, lambda](const Vec&) {
    Mat h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = Mat::Identity(n, n) + lambda * k.transpose() * k;
    h.topRightCorner(n, n) = -lambda * k.transpose();
    h.bottomLeftCorner(n, n) = -lambda * k;
    h.bottomRightCorner(n, n) = (1.0 + lambda) * Mat::Identity(n, n);
    return h;
  };
  spec.mappings.push_back(ReductionMapping::affine(k, Vec::Zero(n)).named("linear"));
  spec.solution = point_solution(2 * n);
  return finish(std::move(spec));
}

ProblemSpec make_highdim_tanh(int n, double lambda, double alpha, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidParam, "tanh-hd: n must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::InvalidParam, "tanh-hd: lambda must be > 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(Errc::InvalidParam, "tanh-hd: alpha must be > 0");
  const Mat k = gaussian_coupling(n, seed);
  ProblemSpec spec;
  spec.name = "tanh-hd";
  spec.params = {{"n", n}, {"lambda", lambda}, {"alpha", alpha}, {"seed", static_cast<double>(seed)}};
  spec.coupling = k;

  Objective& f = spec.objective;
  f.n1 = n;
  f.n2 = n;
  f.value = [k, n, lambda, alpha](const Vec& z) {
    const Vec t = (k * z.head(n)).array().tanh();
    const auto y = z.tail(n);
    return 0.5 * z.head(n).squaredNorm() + 0.5 * y.squaredNorm() + 0.5 * lambda * (y - alpha * t).squaredNorm();
  };
  f.gradient = [k, n, lambda, alpha](const Vec& z) {
    const Vec t = (k * z.head(n)).array().tanh();
    const Vec s = 1.0 - t.array().square();
    const Vec r = z.tail(n) - alpha * t;
    Vec g(2 * n);
    g << z.head(n) - lambda * alpha * k.transpose() * s.cwiseProduct(r), z.tail(n) + lambda * r;
    return g;
  };
  f.hessian = [k, n, lambda, alpha](const Vec& z) {
    const Vec t = (k * z.head(n)).array().tanh();
    const Vec s = 1.0 - t.array().square();
    const Vec r = z.tail(n) - alpha * t;
    const Vec gv = 2.0 * r.cwiseProduct(s).cwiseProduct(t);
    Mat h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = Mat::Identity(n, n) +
                            lambda * alpha * alpha * k.transpose() * s.cwiseProduct(s).asDiagonal() * k +
                            lambda * alpha * k.transpose() * gv.asDiagonal() * k;
    h.topRightCorner(n, n) = -lambda * alpha * k.transpose() * s.asDiagonal();
    h.bottomLeftCorner(n, n) = h.topRightCorner(n, n).transpose();
    h.bottomRightCorner(n, n) = (1.0 + lambda) * Mat::Identity(n, n);
    return h;
  };

  ReductionMapping::ClosedForm psi{
      [k, alpha](const Vec& x) { return Vec(alpha * (k * x).array().tanh()); },
      [k, alpha](const Vec& x) {
        const Vec t = (k * x).array().tanh();
        const Vec s = 1.0 - t.array().square();
        return Mat(alpha * s.asDiagonal() * k);
      },
      [k, n, alpha](const Vec& x) {
        const Vec t = (k * x).array().tanh();
        const Vec s = 1.0 - t.array().square();
        Tensor3 h(n, n, n);
        for (int q = 0; q < n; ++q) {
          h.slices[static_cast<std::size_t>(q)] = (-2.0 * alpha * t(q) * s(q)) * k.row(q).transpose() * k.row(q);
        }
        return h;
      }};
  spec.mappings.push_back(ReductionMapping::closed_form(n, n, std::move(psi)).named("tanh"));
  spec.solution = point_solution(2 * n);
  return finish(std::move(spec));
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {"quad2d", "flat-quartic-sine", "quad-hd", "tanh-hd"};
  return names;
}

ProblemSpec make_problem(const std::string& name, const std::map<std::string, double>& params, std::uint64_t seed) {
  const auto take = [&](std::map<std::string, double> defaults) {
    for (const auto& [key, value] : params) {
      if (!defaults.count(key)) throw Error(Errc::InvalidParam, "problem '" + name + "' has no parameter '" + key + "'");
      defaults[key] = value;
    }
    return defaults;
  };
  const auto as_int = [](double v, const char* what) {
    if (v != std::floor(v) || v < 1 || v > 1e6) throw Error(Errc::InvalidParam, std::string(what) + " must be a positive integer");
    return static_cast<int>(v);
  };
  if (name == "quad2d") {
    const auto p = take({{"M", 10.0}});
    return make_quad2d(p.at("M"));
  }
  if (name == "flat-quartic-sine") {
    const auto p = take({{"a", -0.5}, {"b", 0.5}});
    return make_flat_quartic_sine(p.at("a"), p.at("b"));
  }
  if (name == "quad-hd") {
    const auto p = take({{"n", 40.0}, {"lambda", 10.0}});
    return make_highdim_quadratic(as_int(p.at("n"), "n"), p.at("lambda"), seed);
  }
  if (name == "tanh-hd") {
    const auto p = take({{"n", 40.0}, {"lambda", 10.0}, {"alpha", 1.0}});
    return make_highdim_tanh(as_int(p.at("n"), "n"), p.at("lambda"), p.at("alpha"), seed);
  }
  throw Error(Errc::InvalidParam, "unknown problem '" + name + "'");
}

double distance_to_solution(const ProblemSpec& spec, const Vec& x) {
  if (!spec.solution) throw Error(Errc::NoSolutionSet, spec.name + " has no known solution set");
  if (x.size() != spec.objective.dim()) throw Error(Errc::DimensionMismatch, "distance_to_solution: wrong dimension");
  return spec.solution->distance(x);
}

double plane_curvature(double d1, double d2) { return d2 / std::pow(1.0 + d1 * d1, 1.5); }

}  // namespace redmap

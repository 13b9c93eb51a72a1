#include "commands.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "redmap/propcheck.hpp"

namespace redmap::cli {

namespace fs = std::filesystem;

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.solver.step = Armijo{};
  cfg.solver.grad_tol = 1e-8;
  cfg.solver.max_iter = 10000;
  return cfg;
}

std::string default_mapping(const std::string& problem) {
  if (problem == "quad2d" || problem == "quad-hd") return "linear";
  if (problem == "flat-quartic-sine") return "sine";
  if (problem == "tanh-hd") return "tanh";
  return "";
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::InvalidParam:
      case Errc::DimensionMismatch:
      case Errc::NoSolutionSet:
      case Errc::WrongMappingKind:
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
      default:
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed for " + path.string());
}

struct Setup {
  ProblemSpec spec;
  ReductionMapping mapping;
  std::string mapping_name;
};

Setup build(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.problem.empty()) throw ConfigError("no problem given");
  ProblemSpec spec = make_problem(cfg.problem, cfg.params, seed);
  const std::string name = cfg.mapping.empty() ? default_mapping(cfg.problem) : cfg.mapping;
  ReductionMapping m = spec.mapping(name);
  if (cfg.alpha != 1.0) m = m.with_scale(cfg.alpha);
  return {std::move(spec), std::move(m), name};
}

Vec start_point(const StartSpec& s, int n1, std::uint64_t seed) {
  if (s.preset == "random") {
    std::mt19937_64 rng(seed ^ 0x5ca1ab1e0ddba11ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x(n1);
    for (int i = 0; i < n1; ++i) x(i) = normal(rng);
    return x;
  }
  if (s.preset == "unit") return Vec::Ones(n1);
  if (s.preset == "zero") return Vec::Zero(n1);
  if (s.preset == "explicit") {
    if (static_cast<int>(s.values.size()) != n1) {
      throw ConfigError("start has " + std::to_string(s.values.size()) + " values, expected " + std::to_string(n1));
    }
    return Eigen::Map<const Vec>(s.values.data(), n1);
  }
  throw ConfigError("start preset must be random, unit, zero or a list of numbers");
}

Region region_for(const RunConfig& cfg, int n1, std::uint64_t seed) {
  Region r;
  r.center = Vec::Zero(n1);
  if (cfg.region.center) {
    if (static_cast<int>(cfg.region.center->size()) != n1) throw ConfigError("region center has wrong dimension");
    r.center = Eigen::Map<const Vec>(cfg.region.center->data(), n1);
  }
  r.radius = cfg.region.radius;
  r.samples = cfg.region.samples;
  r.seed = seed;
  validate(r);
  return r;
}

struct Minimiser {
  std::optional<Vec> x1;
  Mat tangent;
};

// "auto" picks a known solution point that lies on the feasible manifold.
Minimiser resolve_minimiser(const RunConfig& cfg, const Setup& s) {
  const int n1 = s.spec.objective.n1;
  const int n = s.spec.objective.dim();
  if (cfg.minimiser == "none") return {std::nullopt, Mat(n, 0)};
  if (cfg.minimiser == "auto") {
    if (!s.spec.solution) return {std::nullopt, Mat(n, 0)};
    for (const Vec& x : s.spec.solution->representatives) {
      const Vec x1 = x.head(n1);
      if ((s.mapping.phi(x1) - x).norm() <= 1e-10) return {x1, s.spec.solution->tangent(x)};
    }
    return {std::nullopt, Mat(n, 0)};
  }
  const std::vector<double> v = parse_list(cfg.minimiser);
  if (static_cast<int>(v.size()) != n1) throw ConfigError("minimiser must have n1 entries");
  const Vec x1 = Eigen::Map<const Vec>(v.data(), n1);
  Mat tangent(n, 0);
  if (s.spec.solution) tangent = s.spec.solution->tangent(s.mapping.phi(x1));
  return {x1, tangent};
}

Exec exec_for(const ReductionMapping& m) {
  // Implicit mappings warm-start from a shared cache; a serial scan keeps the
  // visiting order, and so the output bits, fixed.
  return std::holds_alternative<ReductionMapping::ImplicitArgmin>(m.kind()) ? Exec::Serial : Exec::Parallel;
}

std::string eigs_csv(const ReducedProblem& p, const Vec& x1) {
  const ReducedPoint rp = p.evaluate(x1, 2);
  std::ostringstream os;
  os << "kind,index,value\n";
  const auto emit = [&](const char* kind, const Vec& values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) os << kind << ',' << i << ',' << format_double(values(i)) << '\n';
  };
  emit("full", sym_eig(SymMatrix(rp.hess_full)).values);
  emit("reduced_eucl", sym_eig(SymMatrix(rp.hess)).values);
  emit("reduced_pencil", gen_eig_values(SymMatrix(rp.hess), SymMatrix(rp.metric)));
  return os.str();
}

// Gauss-Newton direction of the residual form F = 1/2 |(x, alpha tanh(K x))|^2,
// solved as a least-squares problem without touching the metric.
Vec gauss_newton_direction(const Mat& k, double alpha, const Vec& x) {
  const Eigen::Index n = x.size();
  const Vec t = (k * x).array().tanh();
  const Vec s = 1.0 - t.array().square();
  Mat j(2 * n, n);
  j << Mat::Identity(n, n), alpha * s.asDiagonal() * k;
  Vec r(2 * n);
  r << x, alpha * t;
  return j.householderQr().solve(r);
}

int run_experiment(const Globals& g, const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Setup s = build(cfg, g.seed);
  const ReducedProblem p(s.spec.objective, s.mapping);
  const int n1 = p.n1();
  const Vec x1_0 = start_point(cfg.start, n1, g.seed);
  // GD on f starts off the graph: on quad-hd Phi(x1) is a fixed direction of
  // the full gradient and GD would land on the solution in one step.
  Vec x_0 = s.mapping.phi(x1_0);
  {
    std::mt19937_64 rng(g.seed ^ 0x0ff9a7b5eedULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = n1; i < x_0.size(); ++i) x_0(i) += normal(rng);
  }

  const bool gn_check = s.spec.name == "tanh-hd" && s.mapping_name == "tanh" && s.spec.coupling;
  const double gn_alpha = gn_check ? s.spec.params.at("alpha") * s.mapping.scale_alpha() : 0.0;

  int status = kExitOk;
  for (Method m : {Method::GD_full, Method::GD_reduced, Method::GeoPrecGD}) {
    SolverConfig sc = cfg.solver;
    sc.method = m;
    RunOptions opts;
    opts.record_time = g.timing;
    double max_dev = 0.0;
    int checked = 0;
    if (gn_check && m == Method::GeoPrecGD) {
      opts.on_geoprec_step = [&](const Vec& x1, const Vec& d) {
        const Vec gn = gauss_newton_direction(*s.spec.coupling, gn_alpha, x1);
        const double scale = std::max(gn.norm(), 1e-300);
        max_dev = std::max(max_dev, (d - gn).norm() / scale);
        ++checked;
      };
    }
    const SolverTrace trace = run(p, m == Method::GD_full ? x_0 : x1_0, sc, opts);
    write_file(dir / (std::string(to_string(m)) + ".csv"), trace_csv(trace));
    log << to_string(m) << ": iterations=" << trace.records.back().iter
        << " converged=" << (trace.converged ? "true" : "false")
        << " final_value=" << format_double(trace.records.back().value) << '\n';
    if (gn_check && m == Method::GeoPrecGD) {
      log << "gauss-newton check: max relative deviation " << format_double(max_dev) << " over " << checked
          << " steps\n";
    }
    if (trace.error) {
      log << "  stopped: " << trace.error_message << '\n';
      status = kExitSolver;
    }
  }

  const Minimiser mn = resolve_minimiser(cfg, s);
  const SpectralReport report =
      condition_report(p, region_for(cfg, n1, g.seed), mn.x1, mn.tangent, kDefaultMultTol, exec_for(s.mapping));
  write_file(dir / "spectral.json", to_json(report).dump(2) + "\n");
  write_file(dir / "eigs.csv", eigs_csv(p, x1_0));
  return status;
}

}  // namespace

int cmd_reproduce(const Globals& g, const RunConfig& cfg) {
  static const std::vector<std::string> examples = {"quad2d", "quad-hd", "tanh-hd"};
  if (std::find(examples.begin(), examples.end(), cfg.problem) == examples.end()) {
    throw ConfigError("reproduce example must be quad2d, quad-hd or tanh-hd, got '" + cfg.problem + "'");
  }
  const int status = run_experiment(g, cfg, g.out / cfg.problem, std::cout);
  std::cout << "wrote " << (g.out / cfg.problem).string() << '\n';
  return status;
}

int cmd_analyze(const Globals& g, const RunConfig& cfg) {
  const Setup s = build(cfg, g.seed);
  const ReducedProblem p(s.spec.objective, s.mapping);
  const Minimiser mn = resolve_minimiser(cfg, s);
  const SpectralReport r = condition_report(p, region_for(cfg, p.n1(), g.seed), mn.x1, mn.tangent,
                                            kDefaultMultTol, exec_for(s.mapping));
  const fs::path path = g.out / cfg.problem / s.mapping_name / "spectral.json";
  write_file(path, to_json(r).dump(2) + "\n");
  const auto flag = [](const std::optional<bool>& b) { return b ? (*b ? "true" : "false") : "n/a"; };
  std::cout << "beta_f=" << format_double(r.beta_f) << " beta_F_riem=" << format_double(r.beta_F_riem)
            << " beta_F_eucl=" << format_double(r.beta_F_eucl) << '\n'
            << "bound_affine_holds=" << flag(r.bound_affine_holds)
            << " bound_nonlinear_holds=" << (r.bound_nonlinear_holds ? "true" : "false")
            << " nonlinear_hypothesis_failed=" << (r.nonlinear_hypothesis_failed ? "true" : "false")
            << " bound_mb_holds=" << flag(r.bound_mb_holds)
            << " star_condition_holds=" << (r.star_condition_holds ? "true" : "false") << '\n'
            << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const Globals& g, const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep needs a parameter and values ([sweep] or --sweep-param/--values)");
  const SweepSpec& sw = *cfg.sweep;
  const int n = static_cast<int>(sw.values.size());
  std::vector<std::string> logs(static_cast<std::size_t>(n));
  std::vector<int> status(static_cast<std::size_t>(n), kExitOk);

  // Validate every entry up front so config errors never leave half a sweep behind.
  for (double v : sw.values) {
    RunConfig entry = cfg;
    if (sw.param == "scale_alpha") {
      entry.alpha = v;
    } else {
      entry.params[sw.param] = v;
    }
    build(entry, g.seed);
  }

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, g.jobs))
  for (int i = 0; i < n; ++i) {
    const double v = sw.values[static_cast<std::size_t>(i)];
    RunConfig entry = cfg;
    if (sw.param == "scale_alpha") {
      entry.alpha = v;
    } else {
      entry.params[sw.param] = v;
    }
    const fs::path dir = g.out / cfg.problem / "sweep" / (sw.param + "=" + format_double(v));
    std::ostringstream log;
    log << "[" << sw.param << "=" << format_double(v) << "]\n";
    status[static_cast<std::size_t>(i)] = guarded([&] { return run_experiment(g, entry, dir, log); });
    logs[static_cast<std::size_t>(i)] = log.str();
  }

  int worst = kExitOk;
  for (int i = 0; i < n; ++i) {
    std::cout << logs[static_cast<std::size_t>(i)];
    worst = std::max(worst, status[static_cast<std::size_t>(i)]);
  }
  return worst;
}

int cmd_propcheck(const Globals& g, const PropcheckArgs& args) {
  if (args.count < 0) throw ConfigError("count must be >= 0");
  if (args.instance_seed || args.family) {
    if (!args.instance_seed || !args.family) throw ConfigError("--family and --instance-seed go together");
    for (Family f : all_families()) {
      if (to_string(f) != *args.family) continue;
      const InstanceOutcome o = run_instance(f, *args.instance_seed, args.corrupt_hessian);
      std::cout << to_string(f) << " seed " << *args.instance_seed << ": "
                << (o.skipped ? "skipped" : (o.passed ? "pass" : "FAIL")) << " (" << o.detail << ")\n";
      return o.skipped || o.passed ? kExitOk : kExitCheckFailed;
    }
    throw ConfigError("unknown family '" + *args.family + "'");
  }

  PropOptions opts;
  opts.seed = g.seed;
  opts.count = args.count;
  opts.corrupt_hessian = args.corrupt_hessian;
  const auto results = run_propcheck(opts);

  std::cout << std::left << std::setw(14) << "family" << std::right << std::setw(10) << "instances" << std::setw(8)
            << "passed" << std::setw(9) << "skipped" << std::setw(8) << "failed" << "  verdict\n";
  const FamilyResult* first_fail = nullptr;
  for (const auto& r : results) {
    std::cout << std::left << std::setw(14) << to_string(r.family) << std::right << std::setw(10) << r.instances
              << std::setw(8) << r.passed << std::setw(9) << r.skipped << std::setw(8) << r.failed << "  "
              << (r.failed == 0 ? "PASS" : "FAIL") << '\n';
    if (r.failed > 0 && !first_fail) first_fail = &r;
  }
  if (!first_fail) return kExitOk;
  std::cout << "first failure: family=" << to_string(first_fail->family) << " index=" << *first_fail->first_failure_index
            << " instance_seed=" << first_fail->first_failure_seed << " base_seed=" << g.seed << '\n'
            << "  " << first_fail->first_failure_detail << '\n'
            << "  rerun: propcheck --family " << to_string(first_fail->family) << " --instance-seed "
            << first_fail->first_failure_seed << (args.corrupt_hessian ? " --corrupt-hessian" : "") << '\n';
  return kExitCheckFailed;
}

}  // namespace redmap::cli

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace redmap;
using namespace redmap::cli;

// Flags shared by reproduce, analyze and sweep; applied after the config file.
struct Overrides {
  std::string problem;
  std::string mapping;
  std::vector<std::string> params;
  std::optional<double> m_param, lambda, alpha;
  std::optional<int> n;
  std::optional<double> scale_alpha;
  std::optional<std::string> method, step, metric_solver, start, center, minimiser;
  std::optional<double> eta, grad_tol, radius;
  std::optional<int> max_iter, samples;
  std::optional<std::string> sweep_param, sweep_values;

  void add_problem_flags(CLI::App* sub) {
    sub->add_option("--M", m_param, "quad2d coupling M");
    sub->add_option("--n", n, "dimension of the high-dimensional problems");
    sub->add_option("--lambda", lambda, "coupling lambda of the high-dimensional problems");
    sub->add_option("--alpha", alpha, "tanh amplitude alpha");
    sub->add_option("--param", params, "problem parameter key=value (repeatable)");
    sub->add_option("--mapping", mapping, "mapping name");
    sub->add_option("--scale-alpha", scale_alpha, "small-slope scale applied to the mapping");
    sub->add_option("--radius", radius, "sampling region radius");
    sub->add_option("--samples", samples, "sampling region sample count");
    sub->add_option("--center", center, "sampling region center, comma separated");
    sub->add_option("--minimiser", minimiser, "auto, none or comma separated x1");
  }

  void add_solver_flags(CLI::App* sub) {
    sub->add_option("--step", step, "armijo or fixed");
    sub->add_option("--eta", eta, "fixed step size / armijo initial step");
    sub->add_option("--grad-tol", grad_tol, "stop once the Euclidean gradient norm is below this");
    sub->add_option("--max-iter", max_iter, "iteration budget");
    sub->add_option("--metric-solver", metric_solver, "direct, cg or woodbury");
    sub->add_option("--start", start, "random, unit, zero or comma separated x1");
  }

  void apply(RunConfig& cfg) const {
    if (!problem.empty()) cfg.problem = problem;
    if (!mapping.empty()) cfg.mapping = mapping;
    for (const auto& p : params) {
      const auto [k, v] = parse_param(p);
      cfg.params[k] = v;
    }
    if (m_param) cfg.params["M"] = *m_param;
    if (n) cfg.params["n"] = *n;
    if (lambda) cfg.params["lambda"] = *lambda;
    if (alpha) cfg.params["alpha"] = *alpha;
    if (scale_alpha) cfg.alpha = *scale_alpha;
    if (step) {
      if (*step == "fixed") {
        cfg.solver.step = FixedStep{eta.value_or(1.0)};
      } else if (*step == "armijo") {
        Armijo a;
        if (eta) a.eta0 = *eta;
        cfg.solver.step = a;
      } else {
        throw ConfigError("--step must be fixed or armijo");
      }
    } else if (eta) {
      if (auto* f = std::get_if<FixedStep>(&cfg.solver.step)) f->eta = *eta;
      if (auto* a = std::get_if<Armijo>(&cfg.solver.step)) a->eta0 = *eta;
    }
    if (grad_tol) cfg.solver.grad_tol = *grad_tol;
    if (max_iter) cfg.solver.max_iter = *max_iter;
    if (metric_solver) cfg.solver.metric.kind = parse_metric_solver(*metric_solver);
    if (start) {
      if (*start == "random" || *start == "unit" || *start == "zero") {
        cfg.start = {*start, {}};
      } else {
        cfg.start = {"explicit", parse_list(*start)};
      }
    }
    if (radius) cfg.region.radius = *radius;
    if (samples) cfg.region.samples = *samples;
    if (center) cfg.region.center = parse_list(*center);
    if (minimiser) cfg.minimiser = *minimiser;
    if (sweep_param || sweep_values) {
      if (!sweep_param || !sweep_values) throw ConfigError("--sweep-param and --values go together");
      cfg.sweep = SweepSpec{*sweep_param, parse_list(*sweep_values)};
    }
    validate(cfg.solver);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduction mappings: reduced objectives, spectral bound checks and preconditioned descent"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::string config_path;
  app.add_option("--seed", g.seed, "seed for sampling, random starts and random problem data");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "concurrent sweep entries")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "TOML or JSON run configuration");
  app.add_flag("--timing", g.timing, "record wall time in trace CSVs (outputs stop being byte-stable)");

  Overrides ov;

  auto* reproduce = app.add_subcommand("reproduce", "run the three solvers on a built-in experiment");
  reproduce->add_option("example", ov.problem, "quad2d, quad-hd or tanh-hd")->required();
  ov.add_problem_flags(reproduce);
  ov.add_solver_flags(reproduce);

  auto* analyze = app.add_subcommand("analyze", "write the spectral report of a problem and mapping");
  analyze->add_option("--problem", ov.problem, "problem name");
  ov.add_problem_flags(analyze);

  auto* sweep = app.add_subcommand("sweep", "reproduce-style runs over a list of parameter values");
  sweep->add_option("--problem", ov.problem, "problem name");
  sweep->add_option("--sweep-param", ov.sweep_param, "parameter to vary (a problem parameter or scale_alpha)");
  sweep->add_option("--values", ov.sweep_values, "comma separated values");
  ov.add_problem_flags(sweep);
  ov.add_solver_flags(sweep);

  PropcheckArgs pc;
  auto* propcheck = app.add_subcommand("propcheck", "randomized checks of the bound inequalities");
  propcheck->add_option("--count", pc.count, "instances per family")->capture_default_str();
  propcheck->add_option("--family", pc.family, "rerun a single instance of this family");
  propcheck->add_option("--instance-seed", pc.instance_seed, "seed of the instance to rerun");
  propcheck->add_flag("--corrupt-hessian", pc.corrupt_hessian, "test hook: perturb every Hessian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  return guarded([&]() -> int {
    if (propcheck->parsed()) return cmd_propcheck(g, pc);
    RunConfig cfg = default_run_config();
    if (!config_path.empty()) apply_config(load_config_file(config_path), cfg);
    ov.apply(cfg);
    if (reproduce->parsed()) return cmd_reproduce(g, cfg);
    if (analyze->parsed()) return cmd_analyze(g, cfg);
    return cmd_sweep(g, cfg);
  });
}

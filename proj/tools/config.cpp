#include "config.hpp"

#include <fstream>
#include <sstream>

#include <toml.hpp>

namespace redmap::cli {

namespace {

using json = nlohmann::json;

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(number(e, key));
  return out;
}

void check_keys(const json& section, const std::string& name, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : section.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
  }
}

void apply_solver(const json& s, SolverConfig& cfg) {
  check_keys(s, "solver", {"method", "step", "eta", "c1", "shrink", "eta0", "grad_tol", "max_iter", "metric_solver",
                           "cg_rel_tol", "cg_max_iter"});
  if (s.contains("method")) cfg.method = parse_method(text(s["method"], "method"));
  std::string step = std::holds_alternative<FixedStep>(cfg.step) ? "fixed" : "armijo";
  if (s.contains("step")) step = text(s["step"], "step");
  if (step == "fixed") {
    FixedStep f = std::holds_alternative<FixedStep>(cfg.step) ? std::get<FixedStep>(cfg.step) : FixedStep{};
    if (s.contains("eta")) f.eta = number(s["eta"], "eta");
    cfg.step = f;
  } else if (step == "armijo") {
    Armijo a = std::holds_alternative<Armijo>(cfg.step) ? std::get<Armijo>(cfg.step) : Armijo{};
    if (s.contains("c1")) a.c1 = number(s["c1"], "c1");
    if (s.contains("shrink")) a.shrink = number(s["shrink"], "shrink");
    if (s.contains("eta0")) a.eta0 = number(s["eta0"], "eta0");
    cfg.step = a;
  } else {
    throw ConfigError("step must be 'fixed' or 'armijo'");
  }
  if (s.contains("grad_tol")) cfg.grad_tol = number(s["grad_tol"], "grad_tol");
  if (s.contains("max_iter")) cfg.max_iter = integer(s["max_iter"], "max_iter");
  if (s.contains("metric_solver")) cfg.metric.kind = parse_metric_solver(text(s["metric_solver"], "metric_solver"));
  if (s.contains("cg_rel_tol")) cfg.metric.cg_rel_tol = number(s["cg_rel_tol"], "cg_rel_tol");
  if (s.contains("cg_max_iter")) cfg.metric.cg_max_iter = integer(s["cg_max_iter"], "cg_max_iter");
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".json") {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    try {
      return json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path.string() + ": " + e.what());
    }
  }
  if (ext == ".toml") {
    try {
      const toml::table table = toml::parse_file(path.string());
      std::ostringstream os;
      os << toml::json_formatter{table};
      return json::parse(os.str());
    } catch (const toml::parse_error& e) {
      throw ConfigError("config " + path.string() + ": " + std::string(e.description()));
    }
  }
  throw ConfigError("config file must end in .toml or .json: " + path.string());
}

void apply_config(const json& doc, RunConfig& cfg) {
  if (!doc.is_object()) throw ConfigError("config root must be a table");
  check_keys(doc, "root", {"problem", "mapping", "solver", "region", "start", "minimiser", "sweep"});
  if (doc.contains("problem")) {
    const json& p = doc["problem"];
    for (const auto& [key, value] : p.items()) {
      if (key == "name") {
        cfg.problem = text(value, "problem.name");
      } else {
        cfg.params[key] = number(value, "problem." + key);
      }
    }
  }
  if (doc.contains("mapping")) {
    const json& m = doc["mapping"];
    check_keys(m, "mapping", {"name", "alpha"});
    if (m.contains("name")) cfg.mapping = text(m["name"], "mapping.name");
    if (m.contains("alpha")) cfg.alpha = number(m["alpha"], "mapping.alpha");
  }
  if (doc.contains("solver")) apply_solver(doc["solver"], cfg.solver);
  if (doc.contains("region")) {
    const json& r = doc["region"];
    check_keys(r, "region", {"center", "radius", "samples"});
    if (r.contains("center")) cfg.region.center = numbers(r["center"], "region.center");
    if (r.contains("radius")) cfg.region.radius = number(r["radius"], "region.radius");
    if (r.contains("samples")) cfg.region.samples = integer(r["samples"], "region.samples");
  }
  if (doc.contains("start")) {
    const json& s = doc["start"];
    check_keys(s, "start", {"preset", "values"});
    if (s.contains("preset")) cfg.start.preset = text(s["preset"], "start.preset");
    if (s.contains("values")) {
      cfg.start.values = numbers(s["values"], "start.values");
      cfg.start.preset = "explicit";
    }
  }
  if (doc.contains("minimiser")) {
    const json& m = doc["minimiser"];
    if (m.is_string()) {
      cfg.minimiser = m.get<std::string>();
    } else {
      std::string joined;
      for (double v : numbers(m, "minimiser")) joined += (joined.empty() ? "" : ",") + format_double(v);
      cfg.minimiser = joined;
    }
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    check_keys(s, "sweep", {"param", "values"});
    if (!s.contains("param") || !s.contains("values")) throw ConfigError("[sweep] needs param and values");
    cfg.sweep = SweepSpec{text(s["param"], "sweep.param"), numbers(s["values"], "sweep.values")};
  }
}

std::vector<double> parse_list(const std::string& input) {
  std::vector<double> out;
  std::stringstream ss(input);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::pair<std::string, double> parse_param(const std::string& input) {
  const auto eq = input.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + input + "'");
  const auto values = parse_list(input.substr(eq + 1));
  if (values.size() != 1) throw ConfigError("expected a single value in '" + input + "'");
  return {input.substr(0, eq), values.front()};
}

MetricSolverKind parse_metric_solver(const std::string& name) {
  if (name == "direct") return MetricSolverKind::Direct;
  if (name == "cg") return MetricSolverKind::Cg;
  if (name == "woodbury") return MetricSolverKind::Woodbury;
  throw ConfigError("metric_solver must be direct, cg or woodbury");
}

}  // namespace redmap::cli

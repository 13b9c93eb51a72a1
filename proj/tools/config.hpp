#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redmap/optim.hpp"
#include "redmap/spectral.hpp"

namespace redmap::cli {

/// Bad user input; maps to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StartSpec {
  std::string preset = "random";  // random | unit | zero | explicit
  std::vector<double> values;     // for explicit
};

struct RegionSpec {
  std::optional<std::vector<double>> center;  // default: zero
  double radius = 1.0;
  int samples = 16;
};

struct SweepSpec {
  std::string param;
  std::vector<double> values;
};

struct RunConfig {
  std::string problem;
  std::map<std::string, double> params;
  std::string mapping;  // empty: the problem's default mapping
  double alpha = 1.0;   // small-slope scale of the mapping
  SolverConfig solver;
  RegionSpec region;
  StartSpec start;
  std::string minimiser = "auto";  // auto | none | comma separated x1
  std::optional<SweepSpec> sweep;
};

/// Loads a TOML or JSON file (chosen by extension) into a JSON tree.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Overlays the sections of `doc` ([problem], [mapping], [solver], [region],
/// [start], [sweep]) on `cfg`.
void apply_config(const nlohmann::json& doc, RunConfig& cfg);

/// "a,b,c" -> {a, b, c}
std::vector<double> parse_list(const std::string& text);
/// "key=value"
std::pair<std::string, double> parse_param(const std::string& text);

MetricSolverKind parse_metric_solver(const std::string& name);

}  // namespace redmap::cli

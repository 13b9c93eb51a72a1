#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"
#include "redmap/problems.hpp"

namespace redmap::cli {

struct Globals {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int jobs = 1;
  bool timing = false;  // record wall time in traces (breaks byte-identical reruns)
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

/// Solver defaults used by every subcommand before config/flags apply.
RunConfig default_run_config();

/// The mapping picked when the config names none.
std::string default_mapping(const std::string& problem);

int cmd_reproduce(const Globals& g, const RunConfig& cfg);
int cmd_analyze(const Globals& g, const RunConfig& cfg);
int cmd_sweep(const Globals& g, const RunConfig& cfg);

struct PropcheckArgs {
  int count = 100;
  bool corrupt_hessian = false;
  std::optional<std::string> family;  // with instance_seed: rerun one instance
  std::optional<std::uint64_t> instance_seed;
};

int cmd_propcheck(const Globals& g, const PropcheckArgs& args);

/// Runs `body`, mapping exceptions to exit statuses with one line on stderr.
int guarded(const std::function<int()>& body);

}  // namespace redmap::cli

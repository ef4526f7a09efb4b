#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mcis/cli/config.hpp"

namespace mcis::cli {

struct RunOptions {
  std::optional<int> workers;  // overrides MCIS_WORKERS and experiment.workers
  std::optional<std::filesystem::path> output;
};

struct RunOutcome {
  nlohmann::json summary;
  std::filesystem::path directory;
  std::string report;  // human-readable text (compare table)
};

// Runs the configured algorithm and writes summary.json, timing.json and the
// algorithm's traces into the output directory. Everything except
// timing.json is byte-identical for a given config and seed, whatever the
// worker count.
RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Worker count: explicit option, then MCIS_WORKERS, then the config.
int resolve_workers(const ExperimentConfig& config, const RunOptions& options);

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDegenerate = 3, kExitGuard = 4 };

// `run`, `validate` or `compare` on a config file. Errors are reported on
// `err` and mapped to exit codes: 2 config, 3 degenerate estimator, 4 guard.
int run_command(const std::string& command, const std::filesystem::path& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err);

}  // namespace mcis::cli

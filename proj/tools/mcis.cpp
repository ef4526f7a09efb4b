#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mcis/cli/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mcis: particle MCMC with importance sampling correction"};
  app.require_subcommand(1);
  std::string config;
  std::optional<int> workers;
  std::optional<std::string> output;

  auto add = [&](const std::string& name, const std::string& help, bool run_flags) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("config", config, "INI or JSON config file")->required()->check(CLI::ExistingFile);
    if (run_flags) {
      cmd->add_option("--workers", workers, "worker threads (overrides MCIS_WORKERS)")->check(CLI::Range(1, 4096));
      cmd->add_option("--output", output, "output directory");
    }
    return cmd;
  };
  auto* run = add("run", "run the configured experiment", true);
  auto* validate = add("validate", "check a config and print derived quantities", false);
  auto* compare = add("compare", "run pmmh, da and mcmc-is side by side", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mcis::cli::kExitConfig;
  }

  mcis::cli::RunOptions opts;
  opts.workers = workers;
  if (output) opts.output = *output;
  std::string command = "run";
  if (validate->parsed()) command = "validate";
  else if (compare->parsed()) command = "compare";
  (void)run;
  return mcis::cli::run_command(command, config, opts, std::cout, std::cerr);
}

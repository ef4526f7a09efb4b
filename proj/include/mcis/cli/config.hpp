#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcis/diagnostics/series.hpp"
#include "mcis/model/euler.hpp"
#include "mcis/model/lgssm.hpp"
#include "mcis/multilevel/schedule.hpp"
#include "mcis/smc/resample.hpp"

namespace mcis::cli {

// Raw key/value document. Keys keep the line they came from (0 for JSON).
struct ConfigValue {
  std::string text;
  int line = 0;
};

struct ConfigDocument {
  std::map<std::string, std::map<std::string, ConfigValue>> sections;
  std::uint64_t hash = 0;  // FNV-1a of the source bytes
};

// [section] / key = value, '#' and ';' comments. Throws ConfigError with the line.
ConfigDocument parse_ini(const std::string& text);
// {"section": {"key": value}}; arrays become comma lists.
ConfigDocument parse_json_config(const std::string& text);
// Picks the parser by extension (.json) or leading '{'.
ConfigDocument load_document(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);

enum class Algorithm { kPf, kPmmh, kDa, kMcmcIs, kMlmcIs, kAbcMcmc, kAbcAdaptive, kCompare };
enum class Family { kLgssm, kOu, kGbm, kGaussianAbc, kLotkaVolterra };

std::string to_string(Algorithm a);
std::string to_string(Family f);

struct ModelConfig {
  Family family = Family::kLgssm;
  // lgssm
  double A = 0.9, Q = 0.25, H = 1.0, R = 1.0;
  // shared by lgssm and the diffusions
  double m0 = 0.0, P0 = 1.0;
  // ou: drift alpha x, gbm: drift mu x; both with diffusion coefficient sigma
  double drift = -0.5, sigma = 0.5;
  double obs_variance = 0.5;
  double interval = 1.0;
  int level = 4;  // Euler level of the exact model outside mlmc-is
  // gaussian-abc
  double abc_sigma = 1.0, y_star = 0.0;
  // lotka-volterra
  std::vector<double> rates{0.5, 0.0025, 0.3};
  std::vector<std::int64_t> init{71, 79};
  std::vector<double> times;
  std::size_t max_events = 100000;
  // observations, inline or simulated
  std::vector<double> observations;
  int simulate_horizon = -1;
  std::uint64_t simulate_seed = 1;
};

struct ParameterConfig {
  std::vector<std::string> names;
  std::string prior = "uniform";
  std::vector<double> lower, upper, mean, sd;
  std::vector<double> initial;
};

struct SamplerConfig {
  std::size_t particles = 64;
  ResampleScheme scheme = ResampleScheme::kSystematic;
  long iterations = 1000;
  long burn_in = 0;
  bool adapt = false;
  double proposal_sd = 0.1;
  double eps_reg = 0.0;
  double rho = 0.0;
  ScheduleVariant schedule = ScheduleVariant::kPlain;
  double eta = 2.0;
  double alpha_star = 0.1;
  double beta = 1.96;
  int replicates = 1;
  long thin = 1;
  std::optional<double> eps0;
  std::vector<double> tolerances;
  IactPolicy iact = IactPolicy::kGeyer;
  double max_cost_units = 1e12;
  bool audit = false;
  int runs = 1;  // independent filters for the pf algorithm
};

// Approximate model for da / mcmc-is / compare.
struct ApproxConfig {
  std::string kind = "kalman";  // kalman | pf
  double r_scale = 2.0;         // observation variance inflation (lgssm)
  std::size_t particles = 32;
  int level = 0;                // Euler level (diffusions)
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kPf;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  int workers = 1;
  ModelConfig model;
  ParameterConfig parameter;
  SamplerConfig sampler;
  ApproxConfig approx;
  std::uint64_t hash = 0;
  std::filesystem::path source;
};

// Schema check plus semantic validation; every failure is a ConfigError
// naming section.key and, for INI input, the line.
ExperimentConfig parse_config(const ConfigDocument& doc, const std::filesystem::path& source = {});
ExperimentConfig load_config(const std::filesystem::path& path);

LinearGaussianSSM to_lgssm(const ModelConfig& model);
DiffusionSSM to_diffusion(const ModelConfig& model);

// Model config with the named parameters replaced by theta.
ModelConfig with_parameters(const ModelConfig& model, const std::vector<std::string>& names,
                            const ParameterPoint& theta);

// Human-readable derived quantities for `validate`.
std::string describe(const ExperimentConfig& config);

}  // namespace mcis::cli

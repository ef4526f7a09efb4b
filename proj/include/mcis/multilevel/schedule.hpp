#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mcis/core/rng.hpp"

namespace mcis {

enum class ScheduleVariant {
  kPlain,      // p_l proportional to 2^{-l(1+rho)}
  kLogFactor,  // p_l proportional to 2^{-l(1+rho)} l (log2(l+1))^eta
  kPoint,      // all mass on one level (deterministic single-level difference)
};

ScheduleVariant parse_schedule_variant(const std::string& name);
std::string to_string(ScheduleVariant v);

// Level distribution (p_l), l >= 1, and particle counts N_l = N_base 2^{ceil(rho l)}.
class LevelSchedule {
 public:
  LevelSchedule() = default;

  double rho() const { return rho_; }
  double eta() const { return eta_; }
  std::size_t n_base() const { return n_base_; }
  ScheduleVariant variant() const { return variant_; }
  int point_level() const { return point_level_; }

  double pmf(int level) const;
  // Particles for the level-l delta filter (l >= 1); N_base for l = 0.
  std::size_t particles(int level) const;
  // First `count` probabilities (levels 1..count).
  std::vector<double> head(int count) const;

  friend LevelSchedule build_schedule(double rho, std::size_t n_base, ScheduleVariant variant, double eta);
  friend LevelSchedule point_schedule(int level, std::size_t n_base, double rho);

 private:
  double rho_ = 0.0;
  double eta_ = 0.0;
  std::size_t n_base_ = 1;
  ScheduleVariant variant_ = ScheduleVariant::kPlain;
  int point_level_ = 1;
  double log_norm_ = 0.0;  // log normalizer (log-factor variant)
};

// Throws ParameterError unless rho in [0, 1], N_base >= 1 and (log factor) eta > 1.
LevelSchedule build_schedule(double rho, std::size_t n_base, ScheduleVariant variant = ScheduleVariant::kPlain,
                             double eta = 2.0);
LevelSchedule point_schedule(int level, std::size_t n_base, double rho = 0.0);

// Inverse-CDF draw, unbounded support.
int sample_level(const LevelSchedule& schedule, RngStream& rng);

nlohmann::json to_json(const LevelSchedule& schedule, int head = 8);

// Per-iteration costs tau_k and cumulative cost C(m).
class CostLedger {
 public:
  void add(double cost);
  std::size_t size() const { return costs_.size(); }
  const std::vector<double>& costs() const { return costs_; }
  // C(m), m = 0..size()
  double cumulative(std::size_t m) const { return m == 0 ? 0.0 : cumulative_[m - 1]; }
  double total() const { return cumulative(costs_.size()); }
  double mean() const;

 private:
  std::vector<double> costs_;
  std::vector<double> cumulative_;
};

// max { m : C(m) <= kappa }
std::size_t realized_length(const CostLedger& ledger, double kappa);

// mean cost times asymptotic variance
double ire(const CostLedger& ledger, double asvar);

nlohmann::json to_json(const CostLedger& ledger);

}  // namespace mcis

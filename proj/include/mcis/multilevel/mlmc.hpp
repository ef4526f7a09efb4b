#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"
#include "mcis/is/is_correction.hpp"
#include "mcis/mcmc/estimators.hpp"
#include "mcis/multilevel/schedule.hpp"
#include "mcis/smc/delta_pf.hpp"
#include "mcis/smc/particle_filter.hpp"

namespace mcis {

// Single-term randomized level increment p_L^{-1} Delta^(L).
struct RandomizedDelta {
  int level = 0;
  double p_level = 0.0;
  DeltaEstimate delta;
};

// Family: level_model(0) is a scalar Feynman-Kac model, coupled_model(l) a
// coupled model for l >= 1.
template <class Family>
RandomizedDelta randomized_delta(const LevelSchedule& schedule, const Family& family, RngStream& rng,
                                 std::span<const PathFunction> functions, const std::optional<std::vector<double>>& centers,
                                 double max_cost_units) {
  RandomizedDelta out;
  RngStream ls = rng.substream(StreamTag::kLevel);
  out.level = sample_level(schedule, ls);
  out.p_level = schedule.pmf(out.level);
  if (out.level > 40)
    throw ResourceGuardError("sampled level " + std::to_string(out.level) + " exceeds the substep guard", out.level);
  const std::size_t n = schedule.particles(out.level);
  const auto coupled = family.coupled_model(out.level);
  const double cost = coupled.cost_units(n);
  if (cost > max_cost_units)
    throw ResourceGuardError("level " + std::to_string(out.level) + " needs " + std::to_string(cost) +
                                 " particle-substeps, above the guard " + std::to_string(max_cost_units) +
                                 "; re-seed or raise the guard",
                             out.level);
  RngStream ds = rng.substream(StreamTag::kDelta);
  out.delta = run_delta_pf(coupled, n, ds, functions, ResampleScheme::kMultinomial, centers);
  return out;
}

// Delta-tilde(phi) = p_L^{-1} Delta^(L)(phi) + p-hat^(0)(phi), with
//   Delta-tilde(1)     = exp(log_scale) * rel_one
//   Delta-tilde(phi_j) = exp(log_scale) * (center[j] * rel_one + rel_centered[j]).
struct RandomizedEstimate {
  int level = 0;
  double p_level = 0.0;
  double log_scale = kNegInf;
  double rel_one = 0.0;
  std::vector<double> center;
  std::vector<double> rel_centered;
  double cost = 0.0;
  SmootherEstimate level_zero;
  DeltaEstimate delta;

  double one() const { return log_scale == kNegInf ? 0.0 : std::exp(log_scale) * rel_one; }
  double value(std::size_t j) const {
    return log_scale == kNegInf ? 0.0 : std::exp(log_scale) * (center[j] * rel_one + rel_centered[j]);
  }
};

template <class Family>
RandomizedEstimate randomized_smoother_estimate(const LevelSchedule& schedule, const Family& family, RngStream& rng,
                                                std::span<const PathFunction> functions = {},
                                                ResampleScheme level_zero_scheme = ResampleScheme::kSystematic,
                                                double max_cost_units = 1e12) {
  RandomizedEstimate out;
  const auto base = family.level_model(0);
  RngStream zs = rng.substream(StreamTag::kLevelZero);
  FilterOptions opt;
  opt.scheme = level_zero_scheme;
  const auto zero = run_particle_filter(base, schedule.n_base(), zs, functions, opt);
  out.level_zero = zero.estimate;
  const auto rd = randomized_delta(schedule, family, rng, functions, zero.estimate.center, max_cost_units);
  out.level = rd.level;
  out.p_level = rd.p_level;
  out.delta = rd.delta;
  out.cost = base.cost_units(schedule.n_base()) + rd.delta.cost_units;
  out.center = zero.estimate.center;
  out.log_scale = std::max(rd.delta.log_scale, zero.estimate.log_normalizer);
  const std::size_t nf = functions.size();
  out.rel_centered.assign(nf, 0.0);
  if (out.log_scale == kNegInf) return out;
  const double a = rd.delta.log_scale == kNegInf ? 0.0 : std::exp(rd.delta.log_scale - out.log_scale) / rd.p_level;
  const double b = zero.estimate.log_normalizer == kNegInf ? 0.0 : std::exp(zero.estimate.log_normalizer - out.log_scale);
  out.rel_one = a * rd.delta.relative_one + b;
  for (std::size_t j = 0; j < nf; ++j)
    out.rel_centered[j] = a * rd.delta.relative_centered[j] + b * zero.estimate.centered[j];
  return out;
}

struct MlmcIsConfig {
  LevelSchedule schedule = build_schedule(0.0, 32);
  double eps = 0.0;
  ChainConfig chain;
  IsConfig is;
  ResampleScheme level_zero_scheme = ResampleScheme::kSystematic;
  double max_cost_units = 1e12;
};

struct MlmcIsResult {
  ApproxChainResult phase_one;
  std::vector<IsWeightedSample> samples;
  std::vector<IsEstimate> estimates;
  CostLedger ledger;
  std::vector<int> level_counts;  // index l: number of draws at level l
};

// Per-iteration cost: the phase-one filter cost of the iteration plus, on the
// first iteration of each jump state, that state's phase-two cost.
CostLedger build_ledger(const ApproxChainResult& phase_one, const std::vector<IsWeightedSample>& samples);

// MCMC-IS with a randomized multilevel correction. `factory(theta)` returns
// the level family for theta. Phase one is a level-0 particle marginal chain
// targeting pr (eps + L-hat^(0)); phase two reuses each state's cached
// level-0 functionals and adds p_L^{-1} Delta^(L).
template <class FamilyFactory>
MlmcIsResult run_mlmc_is(const Prior& prior, ProposalState prop, FamilyFactory factory,
                         const std::vector<ThetaPathFunction>& functions, const MlmcIsConfig& config,
                         const RngStream& rng) {
  if (!(config.eps >= 0.0)) throw ParameterError("regularization eps must be >= 0");
  const std::size_t n0 = config.schedule.n_base();
  auto level_zero = make_pf_estimator(
      [factory](const ParameterPoint& theta) { return factory(theta).level_model(0); }, n0, config.level_zero_scheme,
      functions);

  MlmcIsResult out;
  out.phase_one = run_approx_marginal_chain(prior, std::move(prop), level_zero, config.eps, config.chain, rng);

  const double log_eps = config.eps == 0.0 ? kNegInf : std::log(config.eps);
  const LevelSchedule schedule = config.schedule;
  const double guard = config.max_cost_units;
  WeightFunction weight = [&, schedule, guard, log_eps](const ParameterPoint& theta, double log_approx,
                                                        std::span<const double> cached, RngStream& stream) {
    const double log_den = log_add_exp(log_approx, log_eps);
    if (log_den == kNegInf) throw SupportError("eps + level-0 likelihood estimate is zero at a jump-chain state");
    const auto family = factory(theta);
    const auto bound = bind_theta(functions, theta);
    std::vector<double> centers(cached.begin(), cached.end());
    if (centers.size() != bound.size()) centers.assign(bound.size(), 0.0);
    const auto rd = randomized_delta(schedule, family, stream, bound, centers, guard);
    WeightDraw w;
    w.level = rd.level;
    w.cost = rd.delta.cost_units;
    const double a = rd.delta.log_scale == kNegInf ? 0.0 : std::exp(rd.delta.log_scale - log_den) / rd.p_level;
    const double b = log_approx == kNegInf ? 0.0 : std::exp(log_approx - log_den);
    w.xi_one = a * rd.delta.relative_one + b;
    w.center = centers;
    w.xi_centered.resize(bound.size());
    for (std::size_t j = 0; j < bound.size(); ++j) w.xi_centered[j] = a * rd.delta.relative_centered[j];
    return w;
  };
  out.samples = compute_is_weights(out.phase_one.jump, weight, config.is, rng);
  for (std::size_t j = 0; j < functions.size(); ++j)
    out.estimates.push_back(estimate_asvar_decomposition(out.samples, j));
  out.ledger = build_ledger(out.phase_one, out.samples);
  for (const auto& s : out.samples)
    for (int l : s.levels) {
      if (l >= static_cast<int>(out.level_counts.size())) out.level_counts.resize(l + 1, 0);
      ++out.level_counts[l];
    }
  return out;
}

}  // namespace mcis

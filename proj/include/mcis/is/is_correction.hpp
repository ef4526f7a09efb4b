#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mcis/core/rng.hpp"
#include "mcis/diagnostics/series.hpp"
#include "mcis/mcmc/chain.hpp"

namespace mcis {

// One realization of an IS-type weight at a jump-chain state. With
// xi_f = center * xi_one + xi_centered, xi_one estimates L(theta)/(L0(theta) + eps)
// and xi_f the same times the smoother expectation of f.
struct WeightDraw {
  double xi_one = 0.0;
  std::vector<double> center;
  std::vector<double> xi_centered;
  double cost = 0.0;
  int level = 0;
};

// (theta, cached log L0-hat(theta), cached normalized approximate functionals, stream) -> weight draw
using WeightFunction =
    std::function<WeightDraw(const ParameterPoint&, double, std::span<const double>, RngStream&)>;

// xi = sum_i V^(i) phi(X^(i)) / (L0-hat + eps) from an exact-model estimator.
WeightFunction pf_weight_function(LikelihoodEstimator exact, double eps);

struct IsWeightedSample {
  std::size_t j = 0;
  long multiplicity = 1;
  double xi_one = 0.0;  // replicate average
  std::vector<double> center;
  std::vector<double> xi_centered;
  // per replicate r: rep_xi_one[r], rep_xi_f[r][i]
  std::vector<double> rep_xi_one;
  std::vector<std::vector<double>> rep_xi_f;
  std::vector<int> levels;
  double cost = 0.0;

  double xi_f(std::size_t i) const { return center[i] * xi_one + xi_centered[i]; }
};

struct IsConfig {
  int replicates = 1;  // R
  int workers = 1;
  long thin = 1;
  // one weight per chain iteration instead of per jump (streams still keyed
  // by jump index, so values coincide with the jump form)
  bool full_trace = false;
  StreamTag tag = StreamTag::kPhaseTwo;
};

// Runs the weight function for every (state, replicate) pair in parallel.
// Streams are keyed by (jump index, replicate), so results do not depend on
// the worker count.
std::vector<IsWeightedSample> compute_is_weights(const JumpChain& jump, const WeightFunction& weight,
                                                 const IsConfig& config, const RngStream& rng);

// sum_j m_j xi_j(f) / sum_j m_j xi_j(1), exactly rounded sums.
double self_normalized_estimate(const std::vector<IsWeightedSample>& samples, std::size_t f_index);

struct IsEstimate {
  double value = 0.0;
  double sigma2_1 = 0.0;
  double sigma2_2 = 0.0;
  double total = 0.0;
  bool decomposed = false;  // false when R < 2 (total only)
  double standard_error = 0.0;
  double ess = 0.0;
  long m = 0;
};

// Asymptotic variance of the self-normalized estimator (delta method with an
// IACT over the expanded chain) and, with R >= 2, its split into the chain
// term sigma2_1 and the weight-noise term sigma2_2.
IsEstimate estimate_asvar_decomposition(const std::vector<IsWeightedSample>& samples, std::size_t f_index,
                                        IactPolicy policy = IactPolicy::kGeyer);

struct McmcIsResult {
  ApproxChainResult phase_one;
  std::vector<IsWeightedSample> samples;
  std::vector<IsEstimate> estimates;
  double phase_two_cost = 0.0;
};

McmcIsResult run_mcmc_is(const Prior& prior, ProposalState prop, const LikelihoodEstimator& approx,
                         const WeightFunction& weight, double eps, std::size_t n_functions,
                         const ChainConfig& chain, const IsConfig& is, const RngStream& rng);

void write_is_samples_jsonl(std::ostream& os, const std::vector<IsWeightedSample>& samples);

}  // namespace mcis

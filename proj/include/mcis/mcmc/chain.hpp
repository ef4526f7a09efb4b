#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcis/core/math.hpp"
#include "mcis/core/rng.hpp"
#include "mcis/mcmc/prior.hpp"
#include "mcis/mcmc/proposal.hpp"
#include "mcis/model/feynman_kac.hpp"

namespace mcis {

// One likelihood estimate at a parameter value, with the self-normalized
// smoother functionals p-hat(f)/p-hat(1) that came with it.
struct LikelihoodEstimate {
  double log_likelihood = kNegInf;
  std::vector<double> normalized;
  double cost = 0.0;
};

using LikelihoodEstimator = std::function<LikelihoodEstimate(const ParameterPoint&, RngStream&)>;

struct ChainConfig {
  long iterations = 1000;  // m, kept after burn-in
  long burn_in = 0;        // n_b
  bool adapt = false;      // covariance adaptation during burn-in, frozen afterwards
  std::optional<ParameterPoint> initial;
  int max_init_attempts = 100;
  bool record_trace = true;
};

struct ChainRecord {
  long k = 0;
  ParameterPoint theta;
  double log_likelihood = kNegInf;
  bool accepted = false;
};

struct ChainTrace {
  std::vector<ChainRecord> records;  // post burn-in iterations
  long accepted = 0;                 // post burn-in acceptances
  long burn_in_accepted = 0;
  long adaptation_calls = 0;
  long adaptation_calls_after_freeze = 0;
  double cost = 0.0;                 // estimator cost, all iterations
  std::vector<double> iteration_costs;  // estimator cost per post burn-in iteration
  double acceptance_rate(long m) const { return m > 0 ? static_cast<double>(accepted) / m : 0.0; }
};

struct PmmhResult {
  ChainTrace trace;
  // series[j][k] = normalized functional j at the state after post burn-in iteration k
  std::vector<std::vector<double>> series;
  std::vector<ParameterPoint> thetas;
  std::vector<double> estimates;  // E^PM per functional
  ProposalState proposal;
};

// Particle marginal Metropolis-Hastings. The estimator's normalized outputs
// define the functionals averaged into E^PM.
PmmhResult run_pmmh(const Prior& prior, ProposalState prop, const LikelihoodEstimator& estimator,
                    const ChainConfig& config, const RngStream& rng);

struct DaConfig {
  double eps = 0.0;
  // Also run the stage-two estimator after stage-one rejections (separate
  // stream, chain unaffected) so the acceptance inequality is checked on
  // every iteration.
  bool audit = false;
};

struct DaCheck {
  long k = 0;
  bool stage_one_accepted = false;
  double log_alpha_one = kNegInf;  // log of stage-one ratio
  double log_alpha_two = kNegInf;  // log of stage-two ratio (NaN if not evaluated)
  bool checked = false;
  bool holds = true;
};

struct DaResult {
  PmmhResult chain;
  std::vector<DaCheck> checks;  // one per iteration, burn-in included
  long stage_one_accepted = 0;
  long inequality_checks = 0;
  long inequality_violations = 0;
};

// log(min(1,a) min(1,b)) <= log(min(1,ab)) up to a relative roundoff allowance.
bool da_inequality_holds(double log_a, double log_b);

// Delayed acceptance: stage one screens with approx + eps, stage two corrects
// with the exact-model estimator.
DaResult run_delayed_acceptance(const Prior& prior, ProposalState prop, const LikelihoodEstimator& approx,
                                const LikelihoodEstimator& exact, const DaConfig& da, const ChainConfig& config,
                                const RngStream& rng);

// Distinct accepted states with holding times.
struct JumpChain {
  std::vector<ParameterPoint> theta;
  std::vector<double> log_approx;  // cached log L-hat^(0)
  // cached normalized functionals from the same approximate estimate
  std::vector<std::vector<double>> approx_normalized;
  std::vector<long> holding;
  // when recorded: state index for every post burn-in iteration
  std::vector<std::size_t> iteration_index;

  std::size_t size() const { return theta.size(); }
  long total() const;
  // Jump index of every iteration, rebuilt from holding times.
  std::vector<std::size_t> expand() const;
  // Keeps iterations 0, t, 2t, ... of the expanded chain; adjacent copies of the same state merge.
  JumpChain thinned(long t) const;
};

struct ApproxChainResult {
  JumpChain jump;
  ChainTrace trace;
  ProposalState proposal;
  double eps = 0.0;
};

// Phase one of MCMC-IS: MH (pseudo-marginal if the estimator is random)
// targeting pr(theta) (L^(0)(theta) + eps), emitted as a jump chain.
ApproxChainResult run_approx_marginal_chain(const Prior& prior, ProposalState prop,
                                            const LikelihoodEstimator& approx, double eps,
                                            const ChainConfig& config, const RngStream& rng,
                                            StreamTag tag = StreamTag::kApprox);

void write_trace_jsonl(std::ostream& os, const ChainTrace& trace);
void write_jump_chain_jsonl(std::ostream& os, const JumpChain& jump);

}  // namespace mcis

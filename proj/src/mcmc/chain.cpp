#include "mcis/mcmc/chain.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"

namespace mcis {

namespace {

struct Current {
  ParameterPoint theta;
  double log_prior = kNegInf;
  LikelihoodEstimate est;
  double log_target = kNegInf;  // log(L-hat + eps)
};

double regularized(double log_lik, double log_eps) { return log_add_exp(log_lik, log_eps); }

double log_of(double eps) {
  if (eps < 0.0 || std::isnan(eps)) throw ParameterError("regularization eps must be >= 0");
  return eps == 0.0 ? kNegInf : std::log(eps);
}

ParameterPoint initial_theta(const Prior& prior, const ChainConfig& config, int attempt, RngStream& s) {
  if (config.initial && attempt == 0) {
    if (config.initial->size() != prior.dimension()) throw ParameterError("initial parameter dimension mismatch");
    return *config.initial;
  }
  return prior.sample(s);
}

void check_config(const ChainConfig& config, const Prior& prior, const ProposalState& prop) {
  if (config.iterations < 1) throw ParameterError("chain needs at least one iteration");
  if (config.burn_in < 0) throw ParameterError("burn-in must be >= 0");
  if (prop.dimension() != prior.dimension()) throw ParameterError("proposal and prior dimensions differ");
}

Current initialize(const Prior& prior, const LikelihoodEstimator& estimator, double log_eps, const ChainConfig& config,
                   const RngStream& rng, double& cost) {
  for (int a = 0; a < config.max_init_attempts; ++a) {
    RngStream s = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a));
    Current c;
    c.theta = initial_theta(prior, config, a, s);
    c.log_prior = prior.log_density(c.theta);
    if (c.log_prior == kNegInf) continue;
    RngStream fs = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a), 1);
    c.est = estimator(c.theta, fs);
    cost += c.est.cost;
    c.log_target = regularized(c.est.log_likelihood, log_eps);
    if (c.log_target > kNegInf) return c;
  }
  throw InitializationError("no initial state with positive prior and likelihood estimate after " +
                            std::to_string(config.max_init_attempts) + " attempts");
}

// Adaptation bookkeeping shared by every chain: adapt during burn-in, freeze at its end.
void adapt_step(ProposalState& prop, const ChainConfig& config, const ParameterPoint& theta, long k,
                ChainTrace& trace) {
  if (k <= config.burn_in && config.adapt) {
    if (prop.frozen()) ++trace.adaptation_calls_after_freeze;
    prop = adapt_covariance(prop, theta, k);
    ++trace.adaptation_calls;
  }
  if (k == config.burn_in) prop.freeze();
}

void record(PmmhResult& out, const ChainConfig& config, long k, const Current& c, bool accepted) {
  if (k <= config.burn_in) return;
  if (accepted) ++out.trace.accepted;
  if (config.record_trace) out.trace.records.push_back({k, c.theta, c.est.log_likelihood, accepted});
  out.thetas.push_back(c.theta);
  if (out.series.size() < c.est.normalized.size()) out.series.resize(c.est.normalized.size());
  for (std::size_t j = 0; j < c.est.normalized.size(); ++j) out.series[j].push_back(c.est.normalized[j]);
}

// Average with the first value as reference (exact for constant series).
double centered_mean(const std::vector<double>& x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double r = x.front();
  ExactSum s;
  for (double v : x) s.add(v - r);
  return r + s.value() / static_cast<double>(x.size());
}

void finish(PmmhResult& out) {
  out.estimates.clear();
  for (const auto& s : out.series) out.estimates.push_back(centered_mean(s));
}

}  // namespace

PmmhResult run_pmmh(const Prior& prior, ProposalState prop, const LikelihoodEstimator& estimator,
                    const ChainConfig& config, const RngStream& rng) {
  check_config(config, prior, prop);
  PmmhResult out;
  if (config.burn_in == 0) prop.freeze();
  Current cur = initialize(prior, estimator, kNegInf, config, rng, out.trace.cost);
  const long total = config.burn_in + config.iterations;
  out.thetas.reserve(config.iterations);
  for (long k = 1; k <= total; ++k) {
    RngStream ps = rng.substream(StreamTag::kProposal, k);
    Current prop_state;
    prop_state.theta = propose(cur.theta, prop, ps);
    prop_state.log_prior = prior.log_density(prop_state.theta);
    bool accepted = false;
    if (prop_state.log_prior > kNegInf) {
      RngStream fs = rng.substream(StreamTag::kFilter, k);
      prop_state.est = estimator(prop_state.theta, fs);
      out.trace.cost += prop_state.est.cost;
      prop_state.log_target = prop_state.est.log_likelihood;
      if (prop_state.log_target > kNegInf) {
        const double log_alpha = prop_state.log_prior + prop_state.log_target - cur.log_prior - cur.log_target;
        RngStream as = rng.substream(StreamTag::kAccept, k);
        accepted = log_alpha >= 0.0 || std::log(as.uniform()) < log_alpha;
      }
    }
    if (accepted) {
      cur = std::move(prop_state);
      if (k <= config.burn_in) ++out.trace.burn_in_accepted;
    }
    adapt_step(prop, config, cur.theta, k, out.trace);
    record(out, config, k, cur, accepted);
  }
  out.proposal = prop;
  finish(out);
  return out;
}

bool da_inequality_holds(double log_a, double log_b) {
  const double lhs = std::min(0.0, log_a) + std::min(0.0, log_b);
  const double rhs = std::min(0.0, log_a + log_b);
  if (lhs == kNegInf) return true;
  if (std::isnan(lhs) || std::isnan(rhs)) return false;
  const double tol = 1e-9 * std::max({1.0, std::abs(log_a), std::abs(log_b)});
  return lhs <= rhs + tol;
}

DaResult run_delayed_acceptance(const Prior& prior, ProposalState prop, const LikelihoodEstimator& approx,
                                const LikelihoodEstimator& exact, const DaConfig& da, const ChainConfig& config,
                                const RngStream& rng) {
  check_config(config, prior, prop);
  const double log_eps = log_of(da.eps);
  DaResult out;
  if (config.burn_in == 0) prop.freeze();
  double& cost = out.chain.trace.cost;

  // state: exact estimate in `cur`, approximate in `cur_approx`
  Current cur;
  double cur_approx = kNegInf;
  bool ready = false;
  for (int a = 0; a < config.max_init_attempts && !ready; ++a) {
    RngStream s = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a));
    cur.theta = initial_theta(prior, config, a, s);
    cur.log_prior = prior.log_density(cur.theta);
    if (cur.log_prior == kNegInf) continue;
    RngStream as = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a), 1);
    const auto ap = approx(cur.theta, as);
    cost += ap.cost;
    cur_approx = regularized(ap.log_likelihood, log_eps);
    if (cur_approx == kNegInf) continue;
    RngStream es = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a), 2);
    cur.est = exact(cur.theta, es);
    cost += cur.est.cost;
    cur.log_target = cur.est.log_likelihood;
    ready = cur.log_target > kNegInf;
  }
  if (!ready)
    throw InitializationError("no initial state with positive prior, approximate and exact likelihood after " +
                              std::to_string(config.max_init_attempts) + " attempts");

  const long total = config.burn_in + config.iterations;
  out.checks.reserve(total);
  for (long k = 1; k <= total; ++k) {
    DaCheck chk;
    chk.k = k;
    chk.log_alpha_two = std::numeric_limits<double>::quiet_NaN();
    RngStream ps = rng.substream(StreamTag::kProposal, k);
    Current next;
    next.theta = propose(cur.theta, prop, ps);
    next.log_prior = prior.log_density(next.theta);
    bool accepted = false;
    if (next.log_prior > kNegInf) {
      RngStream as = rng.substream(StreamTag::kApprox, k);
      const auto ap = approx(next.theta, as);
      cost += ap.cost;
      const double next_approx = regularized(ap.log_likelihood, log_eps);
      chk.log_alpha_one = next.log_prior + next_approx - cur.log_prior - cur_approx;
      RngStream u1 = rng.substream(StreamTag::kAccept, k, 1);
      chk.stage_one_accepted =
          chk.log_alpha_one > kNegInf && (chk.log_alpha_one >= 0.0 || std::log(u1.uniform()) < chk.log_alpha_one);

      auto stage_two_ratio = [&](const LikelihoodEstimate& e) {
        if (next_approx == kNegInf) {
          if (e.log_likelihood > kNegInf)
            throw SupportError("approximate likelihood + eps is zero where the exact estimate is positive (iteration " +
                               std::to_string(k) + ")");
          return kNegInf;
        }
        return (e.log_likelihood - next_approx) - (cur.log_target - cur_approx);
      };

      if (chk.stage_one_accepted) {
        ++out.stage_one_accepted;
        RngStream es = rng.substream(StreamTag::kStageTwo, k);
        next.est = exact(next.theta, es);
        cost += next.est.cost;
        next.log_target = next.est.log_likelihood;
        chk.log_alpha_two = stage_two_ratio(next.est);
        RngStream u2 = rng.substream(StreamTag::kAccept, k, 2);
        accepted = chk.log_alpha_two > kNegInf &&
                   (chk.log_alpha_two >= 0.0 || std::log(u2.uniform()) < chk.log_alpha_two);
        if (accepted) cur_approx = next_approx;
      } else if (da.audit) {
        RngStream es = rng.substream(StreamTag::kAudit, k);
        const auto e = exact(next.theta, es);
        chk.log_alpha_two = stage_two_ratio(e);
      }
      if (!std::isnan(chk.log_alpha_two)) {
        chk.checked = true;
        chk.holds = da_inequality_holds(chk.log_alpha_one, chk.log_alpha_two);
        ++out.inequality_checks;
        if (!chk.holds) ++out.inequality_violations;
      }
    } else {
      // zero prior: both sides of the inequality are zero
      chk.log_alpha_one = kNegInf;
      chk.checked = true;
      ++out.inequality_checks;
    }
    if (accepted) {
      cur = std::move(next);
      if (k <= config.burn_in) ++out.chain.trace.burn_in_accepted;
    }
    out.checks.push_back(chk);
    adapt_step(prop, config, cur.theta, k, out.chain.trace);
    record(out.chain, config, k, cur, accepted);
  }
  out.chain.proposal = prop;
  finish(out.chain);
  return out;
}

long JumpChain::total() const {
  long s = 0;
  for (long h : holding) s += h;
  return s;
}

std::vector<std::size_t> JumpChain::expand() const {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(total()));
  for (std::size_t j = 0; j < holding.size(); ++j)
    for (long c = 0; c < holding[j]; ++c) out.push_back(j);
  return out;
}

JumpChain JumpChain::thinned(long t) const {
  if (t < 1) throw ParameterError("thinning factor must be >= 1");
  JumpChain out;
  long it = 0;
  std::size_t last = std::numeric_limits<std::size_t>::max();
  for (std::size_t j = 0; j < holding.size(); ++j) {
    for (long c = 0; c < holding[j]; ++c, ++it) {
      if (it % t != 0) continue;
      if (j != last) {
        out.theta.push_back(theta[j]);
        out.log_approx.push_back(log_approx[j]);
        if (j < approx_normalized.size()) out.approx_normalized.push_back(approx_normalized[j]);
        out.holding.push_back(0);
        last = j;
      }
      ++out.holding.back();
    }
  }
  return out;
}

ApproxChainResult run_approx_marginal_chain(const Prior& prior, ProposalState prop,
                                            const LikelihoodEstimator& approx, double eps,
                                            const ChainConfig& config, const RngStream& rng, StreamTag tag) {
  check_config(config, prior, prop);
  const double log_eps = log_of(eps);
  ApproxChainResult out;
  out.eps = eps;
  if (config.burn_in == 0) prop.freeze();
  Current cur = initialize(prior, approx, log_eps, config, rng, out.trace.cost);
  const long total = config.burn_in + config.iterations;
  for (long k = 1; k <= total; ++k) {
    RngStream ps = rng.substream(StreamTag::kProposal, k);
    Current next;
    next.theta = propose(cur.theta, prop, ps);
    next.log_prior = prior.log_density(next.theta);
    bool accepted = false;
    double iteration_cost = 0.0;
    if (next.log_prior > kNegInf) {
      RngStream fs = rng.substream(tag, k);
      next.est = approx(next.theta, fs);
      out.trace.cost += next.est.cost;
      iteration_cost = next.est.cost;
      next.log_target = regularized(next.est.log_likelihood, log_eps);
      if (next.log_target > kNegInf) {
        const double log_alpha = next.log_prior + next.log_target - cur.log_prior - cur.log_target;
        RngStream as = rng.substream(StreamTag::kAccept, k);
        accepted = log_alpha >= 0.0 || std::log(as.uniform()) < log_alpha;
      }
    }
    if (accepted) {
      cur = std::move(next);
      if (k <= config.burn_in) ++out.trace.burn_in_accepted;
    }
    adapt_step(prop, config, cur.theta, k, out.trace);
    if (k <= config.burn_in) continue;
    if (accepted) ++out.trace.accepted;
    out.trace.iteration_costs.push_back(iteration_cost);
    if (config.record_trace) out.trace.records.push_back({k, cur.theta, cur.est.log_likelihood, accepted});
    if (out.jump.holding.empty() || accepted) {
      out.jump.theta.push_back(cur.theta);
      out.jump.log_approx.push_back(cur.est.log_likelihood);
      out.jump.approx_normalized.push_back(cur.est.normalized);
      out.jump.holding.push_back(0);
    }
    ++out.jump.holding.back();
    if (config.record_trace) out.jump.iteration_index.push_back(out.jump.size() - 1);
  }
  out.proposal = prop;
  return out;
}

namespace {

nlohmann::json theta_json(const ParameterPoint& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_trace_jsonl(std::ostream& os, const ChainTrace& trace) {
  for (const auto& r : trace.records) {
    nlohmann::json j;
    j["k"] = r.k;
    j["theta"] = theta_json(r.theta);
    j["loglik_hat"] = finite_or_null(r.log_likelihood);
    j["accepted"] = r.accepted;
    os << j.dump() << '\n';
  }
}

void write_jump_chain_jsonl(std::ostream& os, const JumpChain& jump) {
  for (std::size_t i = 0; i < jump.size(); ++i) {
    nlohmann::json j;
    j["j"] = i;
    j["theta"] = theta_json(jump.theta[i]);
    j["loglik0_hat"] = finite_or_null(jump.log_approx[i]);
    j["holding_time"] = jump.holding[i];
    os << j.dump() << '\n';
  }
}

}  // namespace mcis

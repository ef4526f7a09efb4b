#include "mcis/is/is_correction.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"
#include "mcis/core/parallel.hpp"

namespace mcis {

WeightFunction pf_weight_function(LikelihoodEstimator exact, double eps) {
  if (!(eps >= 0.0)) throw ParameterError("regularization eps must be >= 0");
  const double log_eps = eps == 0.0 ? kNegInf : std::log(eps);
  return [exact = std::move(exact), log_eps](const ParameterPoint& theta, double log_approx, std::span<const double>,
                                             RngStream& rng) {
    const double log_den = log_add_exp(log_approx, log_eps);
    if (log_den == kNegInf) throw SupportError("approximate likelihood + eps is zero at a jump-chain state");
    const LikelihoodEstimate e = exact(theta, rng);
    WeightDraw w;
    w.xi_one = e.log_likelihood == kNegInf ? 0.0 : std::exp(e.log_likelihood - log_den);
    w.center = e.normalized;
    w.xi_centered.assign(e.normalized.size(), 0.0);
    w.cost = e.cost;
    return w;
  };
}

namespace {

template <class E>
[[noreturn]] void rethrow_indexed(const E& e, std::size_t j) {
  throw E("jump state " + std::to_string(j) + ": " + e.what());
}

WeightDraw evaluate(const WeightFunction& weight, const JumpChain& jump, std::size_t j, RngStream& rng) {
  try {
    static const std::vector<double> none;
    const auto& cached = j < jump.approx_normalized.size() ? jump.approx_normalized[j] : none;
    return weight(jump.theta[j], jump.log_approx[j], cached, rng);
  } catch (const NumericalError& e) {
    throw NumericalError("jump state " + std::to_string(j) + ": " + e.what(), e.state(), e.theta(), e.level());
  } catch (const ResourceGuardError& e) {
    throw ResourceGuardError("jump state " + std::to_string(j) + ": " + e.what(), e.level());
  } catch (const SupportError& e) {
    rethrow_indexed(e, j);
  } catch (const DegenerateError& e) {
    rethrow_indexed(e, j);
  } catch (const ParameterError& e) {
    rethrow_indexed(e, j);
  } catch (const Error& e) {
    throw ModelError("jump state " + std::to_string(j) + ": " + e.what());
  }
}

IsWeightedSample combine(std::size_t j, long multiplicity, std::vector<WeightDraw>& reps) {
  IsWeightedSample s;
  s.j = j;
  s.multiplicity = multiplicity;
  const std::size_t R = reps.size();
  const std::size_t nf = reps.front().center.size();
  s.center = reps.front().center;
  s.xi_centered.assign(nf, 0.0);
  double one = 0.0;
  for (const auto& w : reps) {
    if (w.center.size() != nf || w.xi_centered.size() != nf)
      throw ModelError("weight function returned inconsistent functional counts");
    one += w.xi_one;
    for (std::size_t i = 0; i < nf; ++i) s.xi_centered[i] += (w.center[i] - s.center[i]) * w.xi_one + w.xi_centered[i];
    s.rep_xi_one.push_back(w.xi_one);
    std::vector<double> f(nf);
    for (std::size_t i = 0; i < nf; ++i) f[i] = w.center[i] * w.xi_one + w.xi_centered[i];
    s.rep_xi_f.push_back(std::move(f));
    s.levels.push_back(w.level);
    s.cost += w.cost;
  }
  const double dr = static_cast<double>(R);
  s.xi_one = R == 1 ? one : one / dr;
  if (R > 1)
    for (auto& v : s.xi_centered) v /= dr;
  return s;
}

}  // namespace

std::vector<IsWeightedSample> compute_is_weights(const JumpChain& jump_in, const WeightFunction& weight,
                                                 const IsConfig& config, const RngStream& rng) {
  if (config.replicates < 1) throw ParameterError("IS replicates must be >= 1");
  const JumpChain jump = config.thin > 1 ? jump_in.thinned(config.thin) : jump_in;
  const std::size_t states = jump.size();
  const std::size_t R = static_cast<std::size_t>(config.replicates);

  std::vector<std::size_t> owner;  // jump index per output sample
  std::vector<long> mult;
  if (config.full_trace) {
    owner = jump.expand();
    mult.assign(owner.size(), 1);
  } else {
    owner.resize(states);
    for (std::size_t j = 0; j < states; ++j) owner[j] = j;
    mult = jump.holding;
  }
  const std::size_t n = owner.size();
  std::vector<WeightDraw> draws(n * R);
  parallel_for(n * R, config.workers, [&](std::size_t item) {
    const std::size_t s = item / R;
    const std::size_t r = item % R;
    const std::size_t j = owner[s];
    RngStream stream = rng.substream(config.tag, j, r);
    draws[item] = evaluate(weight, jump, j, stream);
  });

  std::vector<IsWeightedSample> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<WeightDraw> reps(std::make_move_iterator(draws.begin() + s * R),
                                 std::make_move_iterator(draws.begin() + (s + 1) * R));
    out.push_back(combine(owner[s], mult[s], reps));
  }
  return out;
}

namespace {

struct Sums {
  double reference = 0.0;
  double den = 0.0;
  double num = 0.0;  // relative to reference
  long m = 0;
};

Sums weighted_sums(const std::vector<IsWeightedSample>& samples, std::size_t f) {
  if (samples.empty()) throw DegenerateError("no weighted samples");
  if (f >= samples.front().center.size()) throw ParameterError("test function index out of range");
  Sums s;
  s.reference = samples.front().center[f];
  ExactSum den;
  ExactSum num;
  for (const auto& x : samples) {
    const double md = static_cast<double>(x.multiplicity);
    den.add_product(md, x.xi_one);
    num.add_product(md, (x.center[f] - s.reference) * x.xi_one + x.xi_centered[f]);
    s.m += x.multiplicity;
  }
  s.den = den.value();
  s.num = num.value();
  if (s.den == 0.0 || !std::isfinite(s.den))
    throw DegenerateError("IS normalizer sum_j m_j xi_j(1) is zero or not finite; increase eps or the chain length");
  return s;
}

}  // namespace

double self_normalized_estimate(const std::vector<IsWeightedSample>& samples, std::size_t f_index) {
  const Sums s = weighted_sums(samples, f_index);
  return s.reference + s.num / s.den;
}

IsEstimate estimate_asvar_decomposition(const std::vector<IsWeightedSample>& samples, std::size_t f_index,
                                        IactPolicy policy) {
  const Sums s = weighted_sums(samples, f_index);
  IsEstimate out;
  out.value = s.reference + s.num / s.den;
  out.m = s.m;
  const double md = static_cast<double>(s.m);
  const double c = s.den / md;
  const double E = out.value;

  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(s.m));
  double sq = 0.0;
  for (const auto& x : samples) {
    const double v = (x.center[f_index] - E) * x.xi_one + x.xi_centered[f_index];
    for (long k = 0; k < x.multiplicity; ++k) g.push_back(v);
    sq += static_cast<double>(x.multiplicity) * x.xi_one * x.xi_one;
  }
  out.ess = sq > 0.0 ? s.den * s.den / sq : 0.0;
  out.total = g.size() >= 10 ? series_stats(g, policy).asvar / (c * c) : 0.0;

  bool have_reps = true;
  for (const auto& x : samples)
    if (x.rep_xi_one.size() < 2) have_reps = false;
  if (have_reps) {
    double noise = 0.0;
    for (const auto& x : samples) {
      const std::size_t R = x.rep_xi_one.size();
      std::vector<double> gr(R);
      double mu = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        gr[r] = x.rep_xi_f[r][f_index] - E * x.rep_xi_one[r];
        mu += gr[r];
      }
      mu /= static_cast<double>(R);
      double ss = 0.0;
      for (double v : gr) ss += (v - mu) * (v - mu);
      const double var_mean = ss / static_cast<double>(R - 1) / static_cast<double>(R);
      const double mj = static_cast<double>(x.multiplicity);
      noise += mj * mj * var_mean;
    }
    out.sigma2_2 = noise / md / (c * c);
    out.sigma2_1 = std::max(out.total - out.sigma2_2, 0.0);
    out.total = out.sigma2_1 + out.sigma2_2;
    out.decomposed = true;
  }
  out.standard_error = std::sqrt(out.total / md);
  return out;
}

McmcIsResult run_mcmc_is(const Prior& prior, ProposalState prop, const LikelihoodEstimator& approx,
                         const WeightFunction& weight, double eps, std::size_t n_functions,
                         const ChainConfig& chain, const IsConfig& is, const RngStream& rng) {
  McmcIsResult out;
  out.phase_one = run_approx_marginal_chain(prior, std::move(prop), approx, eps, chain, rng);
  out.samples = compute_is_weights(out.phase_one.jump, weight, is, rng);
  for (const auto& s : out.samples) out.phase_two_cost += s.cost;
  for (std::size_t i = 0; i < n_functions; ++i) out.estimates.push_back(estimate_asvar_decomposition(out.samples, i));
  return out;
}

void write_is_samples_jsonl(std::ostream& os, const std::vector<IsWeightedSample>& samples) {
  for (const auto& s : samples) {
    nlohmann::json j;
    j["j"] = s.j;
    j["m_j"] = s.multiplicity;
    j["xi_one"] = s.xi_one;
    std::vector<double> f;
    for (std::size_t i = 0; i < s.center.size(); ++i) f.push_back(s.xi_f(i));
    j["xi_f"] = f;
    if (!s.levels.empty() && s.levels.front() > 0) j["level"] = s.levels;
    j["cost"] = s.cost;
    os << j.dump() << '\n';
  }
}

}  // namespace mcis

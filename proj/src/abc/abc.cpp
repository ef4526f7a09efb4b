#include "mcis/abc/abc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

namespace {

struct Start {
  ParameterPoint theta;
  double log_prior = kNegInf;
  double distance = 0.0;
};

Start initialize(const AbcModel& model, const Prior& prior, const AbcChainStart& start, const RngStream& rng) {
  for (int a = 0; a < start.max_init_attempts; ++a) {
    RngStream s = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a));
    Start st;
    st.theta = (start.theta && a == 0) ? *start.theta : prior.sample(s);
    if (st.theta.size() != prior.dimension()) throw ParameterError("initial parameter dimension mismatch");
    st.log_prior = prior.log_density(st.theta);
    if (st.log_prior == kNegInf) continue;
    if (start.distance && a == 0) {
      st.distance = *start.distance;
    } else {
      RngStream ys = rng.substream(StreamTag::kInit, static_cast<std::uint64_t>(a), 1);
      st.distance = model.simulate_distance(st.theta, ys);
    }
    return st;
  }
  throw InitializationError("no initial ABC state with positive prior density after " +
                            std::to_string(start.max_init_attempts) + " attempts");
}

// One ABC-MCMC step at tolerance eps. Returns the realized acceptance probability.
double abc_step(const AbcModel& model, double eps, const Prior& prior, const ProposalState& prop, Start& cur, long k,
                const RngStream& rng, bool& accepted) {
  RngStream ps = rng.substream(StreamTag::kProposal, static_cast<std::uint64_t>(k));
  ParameterPoint next = propose(cur.theta, prop, ps);
  const double lp = prior.log_density(next);
  accepted = false;
  if (lp == kNegInf) return 0.0;
  RngStream ys = rng.substream(StreamTag::kSimulate, static_cast<std::uint64_t>(k));
  double d;
  try {
    d = model.simulate_distance(next, ys);
  } catch (const Error& e) {
    throw ModelError("simulator failed at iteration " + std::to_string(k) + ": " + e.what());
  }
  if (std::isnan(d) || d < 0.0) throw ModelError("distance must be a nonnegative number (iteration " + std::to_string(k) + ")");
  const double alpha = d <= eps ? std::min(1.0, std::exp(lp - cur.log_prior)) : 0.0;
  if (alpha > 0.0) {
    RngStream us = rng.substream(StreamTag::kAccept, static_cast<std::uint64_t>(k));
    accepted = alpha >= 1.0 || us.uniform() < alpha;
  }
  if (accepted) {
    cur.theta = std::move(next);
    cur.log_prior = lp;
    cur.distance = d;
  }
  return alpha;
}

}  // namespace

AbcTrace run_abc_mcmc(const AbcModel& model, double eps0, const Prior& prior, const ProposalState& prop, long n,
                      const RngStream& rng, const AbcChainStart& start) {
  if (!(eps0 > 0.0)) throw ParameterError("ABC tolerance must be positive");
  if (n < 1) throw ParameterError("ABC-MCMC needs at least one iteration");
  if (prop.dimension() != prior.dimension()) throw ParameterError("proposal and prior dimensions differ");
  Start cur = initialize(model, prior, start, rng);
  AbcTrace tr;
  tr.eps0 = eps0;
  tr.initial_theta = cur.theta;
  tr.initial_distance = cur.distance;
  tr.theta.reserve(n);
  tr.distance.reserve(n);
  tr.accepted.reserve(n);
  tr.alpha.reserve(n);
  for (long k = 0; k < n; ++k) {
    bool acc = false;
    tr.alpha.push_back(abc_step(model, eps0, prior, prop, cur, k, rng, acc));
    if (acc) ++tr.acceptances;
    tr.theta.push_back(cur.theta);
    tr.distance.push_back(cur.distance);
    tr.accepted.push_back(acc);
  }
  return tr;
}

ToleranceAdaptResult run_tolerance_adaptation(const AbcModel& model, const Prior& prior, ProposalState prop,
                                              const ToleranceAdaptConfig& config, const RngStream& rng) {
  if (config.n_b < 1) throw ParameterError("tolerance adaptation needs n_b >= 1");
  if (!(config.alpha_star > 0.0 && config.alpha_star < 1.0)) throw ParameterError("alpha* must lie in (0,1)");
  if (prop.dimension() != prior.dimension()) throw ParameterError("proposal and prior dimensions differ");
  Start cur = initialize(model, prior, config.start, rng);
  double eps = config.eps_init.value_or(cur.distance);
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw ParameterError("initial tolerance must be positive and finite (set eps_init when d(Y_0, y*) = 0)");
  ToleranceAdaptResult out;
  out.eps_path.reserve(config.n_b + 1);
  out.eps_path.push_back(eps);
  double log_eps = std::log(eps);
  for (long k = 0; k < config.n_b; ++k) {
    bool acc = false;
    const double alpha = abc_step(model, std::exp(log_eps), prior, prop, cur, k, rng, acc);
    if (acc) ++out.acceptances;
    out.alpha.push_back(alpha);
    const double gamma = std::pow(static_cast<double>(k + 1), -2.0 / 3.0);
    log_eps += gamma * (config.alpha_star - alpha);
    out.eps_path.push_back(std::exp(log_eps));
    if (config.adapt_covariance) prop = adapt_covariance(prop, cur.theta, k + 1);
  }
  prop.freeze();
  out.theta = cur.theta;
  out.eps = std::exp(log_eps);
  out.distance = cur.distance;
  out.proposal = prop;
  return out;
}

namespace {

// argmin of T with the lowest index among ties
std::size_t argmin_distance(const AbcTrace& trace) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace.distance[k] < trace.distance[best]) best = k;
  return best;
}

void check_eps(const AbcTrace& trace, double eps) {
  if (trace.size() == 0) throw ParameterError("empty ABC trace");
  if (!(eps > 0.0)) throw ParameterError("tolerance must be positive");
  if (eps > trace.eps0) throw ParameterError("post-correction tolerance must not exceed the chain tolerance");
}

}  // namespace

double post_correct(const AbcTrace& trace, double eps, const ParameterFunction& f) {
  check_eps(trace, eps);
  const double ref = f(trace.theta[argmin_distance(trace)]);
  ExactSum sum;
  std::size_t count = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (!(trace.distance[k] <= eps)) continue;
    sum.add(f(trace.theta[k]) - ref);
    ++count;
  }
  if (count == 0) {
    std::ostringstream msg;
    msg << "no ABC sample within tolerance " << eps << "; smallest distance is "
        << trace.distance[argmin_distance(trace)];
    throw DegenerateError(msg.str());
  }
  return ref + sum.value() / static_cast<double>(count);
}

std::vector<CurvePoint> post_correct_curve(const AbcTrace& trace, const ParameterFunction& f,
                                           const std::vector<double>& grid) {
  const std::size_t n = trace.size();
  std::vector<CurvePoint> out;
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trace.distance[a] < trace.distance[b]; });
  const double ref = f(trace.theta[order[0]]);

  // prefix[c] = sum over the c smallest distances
  std::vector<double> prefix(n + 1, 0.0);
  std::vector<double> prefix_sq(n + 1, 0.0);
  std::vector<double> sorted_t(n);
  ExactSum s;
  ExactSum s2;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t k = order[c];
    const double d = f(trace.theta[k]) - ref;
    s.add(d);
    s2.add_product(d, d);
    prefix[c + 1] = s.value();
    prefix_sq[c + 1] = s2.value();
    sorted_t[c] = trace.distance[k];
  }

  auto point = [&](double eps) {
    CurvePoint p;
    p.eps = eps;
    p.count = static_cast<std::size_t>(std::upper_bound(sorted_t.begin(), sorted_t.end(), eps) - sorted_t.begin());
    if (p.count == 0) {
      p.estimate = std::numeric_limits<double>::quiet_NaN();
      p.variance_s = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    const double c = static_cast<double>(p.count);
    const double rel = prefix[p.count] / c;
    p.estimate = ref + rel;
    const double ss = std::max(prefix_sq[p.count] - c * rel * rel, 0.0);
    p.variance_s = ss / (c * c);
    return p;
  };

  if (!grid.empty()) {
    for (double eps : grid) out.push_back(point(eps));
    return out;
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double t = sorted_t[c];
    if (t > trace.eps0) break;
    if (c + 1 < n && sorted_t[c + 1] == t) continue;  // last of a tie group
    if (t <= 0.0) continue;
    out.push_back(point(t));
  }
  return out;
}

AbcCiReport abc_confidence_interval(const AbcTrace& trace, double eps, const ParameterFunction& f, double beta,
                                    IactPolicy policy) {
  check_eps(trace, eps);
  if (trace.size() < 100) throw ParameterError("confidence interval needs at least 100 ABC samples");
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  AbcCiReport r;
  r.eps = eps;
  r.beta = beta;
  r.estimate = post_correct(trace, eps, f);
  std::vector<double> fx(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) fx[k] = f(trace.theta[k]);
  double ss = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (!(trace.distance[k] <= eps)) continue;
    const double d = fx[k] - r.estimate;
    ss += d * d;
    ++r.count;
  }
  const double c = static_cast<double>(r.count);
  r.variance_s = ss / (c * c);
  r.iact = series_stats(fx, policy).iact;
  const double half = beta * std::sqrt(r.iact * r.variance_s);
  r.lower = r.estimate - half;
  r.upper = r.estimate + half;
  return r;
}

AdaptiveAbcResult run_adaptive_abc(const AbcModel& model, const Prior& prior, ProposalState prop,
                                   const ToleranceAdaptConfig& config, long n, const RngStream& rng) {
  AdaptiveAbcResult out;
  out.adaptation = run_tolerance_adaptation(model, prior, std::move(prop), config, rng.substream(StreamTag::kChain, 0));
  AbcChainStart start;
  start.theta = out.adaptation.theta;
  start.distance = out.adaptation.distance;
  out.trace = run_abc_mcmc(model, out.adaptation.eps, prior, out.adaptation.proposal, n,
                           rng.substream(StreamTag::kChain, 1), start);
  return out;
}

void write_abc_trace_jsonl(std::ostream& os, const AbcTrace& trace) {
  for (std::size_t k = 0; k < trace.size(); ++k) {
    nlohmann::json j;
    j["k"] = k + 1;
    j["theta"] = std::vector<double>(trace.theta[k].data(), trace.theta[k].data() + trace.theta[k].size());
    j["distance"] = std::isfinite(trace.distance[k]) ? nlohmann::json(trace.distance[k]) : nlohmann::json(nullptr);
    j["accepted"] = static_cast<bool>(trace.accepted[k]);
    os << j.dump() << '\n';
  }
}

void write_curve_csv(std::ostream& os, const AbcTrace& trace, const std::vector<CurvePoint>& curve,
                     const ParameterFunction& f, double beta, IactPolicy policy) {
  double tau = 1.0;
  if (trace.size() >= 10) {
    std::vector<double> fx(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) fx[k] = f(trace.theta[k]);
    tau = series_stats(fx, policy).iact;
  }
  os << "epsilon,estimate,ci_lo,ci_hi\n";
  os.precision(17);
  for (const auto& p : curve) {
    if (p.count == 0) continue;
    const double half = beta * std::sqrt(tau * p.variance_s);
    os << p.eps << ',' << p.estimate << ',' << p.estimate - half << ',' << p.estimate + half << '\n';
  }
}

}  // namespace mcis

#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mcis/mcmc/chain.hpp"
#include "mcis/smc/particle_filter.hpp"

namespace mcis {

// f(theta, .) for each test function, as path functions.
inline std::vector<PathFunction> bind_theta(const std::vector<ThetaPathFunction>& fs, const ParameterPoint& theta) {
  std::vector<PathFunction> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back([&f, theta](std::span<const double> x) { return f(theta, x); });
  return out;
}

// Particle filter likelihood estimator; `factory(theta)` builds the scalar
// Feynman-Kac model for theta. Cost is counted in particle steps N (n + 1).
template <class Factory>
LikelihoodEstimator make_pf_estimator(Factory factory, std::size_t N, ResampleScheme scheme,
                                      std::vector<ThetaPathFunction> functions) {
  return [factory = std::move(factory), N, scheme, functions = std::move(functions)](const ParameterPoint& theta,
                                                                                     RngStream& rng) {
    const auto model = factory(theta);
    const auto bound = bind_theta(functions, theta);
    FilterOptions opt;
    opt.scheme = scheme;
    const auto res = run_particle_filter(model, N, rng, bound, opt);
    LikelihoodEstimate e;
    e.log_likelihood = res.estimate.log_normalizer;
    e.normalized.resize(functions.size());
    for (std::size_t j = 0; j < functions.size(); ++j) e.normalized[j] = res.estimate.normalized(j);
    e.cost = static_cast<double>(N) * (model.horizon() + 1);
    return e;
  };
}

// Deterministic estimator from a closed-form log-likelihood; functionals are
// supplied directly as functions of theta (e.g. exact smoothed means).
inline LikelihoodEstimator make_deterministic_estimator(
    std::function<double(const ParameterPoint&)> log_likelihood,
    std::function<std::vector<double>(const ParameterPoint&)> functionals = {}) {
  return [ll = std::move(log_likelihood), fn = std::move(functionals)](const ParameterPoint& theta, RngStream&) {
    LikelihoodEstimate e;
    e.log_likelihood = ll(theta);
    if (fn) e.normalized = fn(theta);
    e.cost = 1.0;
    return e;
  };
}

}  // namespace mcis

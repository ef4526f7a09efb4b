#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <optional>
#include <span>
#include <vector>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"
#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"
#include "mcis/smc/resample.hpp"

namespace mcis {

// Weighted trajectories of one particle filter run, stored per time step with
// ancestor indices (trajectories are rebuilt by index chasing).
template <class State>
struct ParticleCloud {
  std::size_t N = 0;
  // states[p][i] = X_p^(i) before resampling at p+1
  std::vector<std::vector<State>> states;
  // ancestors[p][i] = A_{p+1}^(i), index into states[p], p = 0..n-1
  std::vector<std::vector<std::uint32_t>> ancestors;
  // log V_p^(i) at the last completed step
  std::vector<double> log_weights;
  // log V*_p for p = 0..last step
  std::vector<double> log_totals;
  // false if every weight vanished at some step (filter stopped there)
  bool complete = true;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  double log_normalizer() const { return log_totals.empty() ? kNegInf : log_totals.back(); }

  // Indices of the ancestral line of final particle i: idx[p] indexes states[p].
  std::vector<std::uint32_t> lineage(std::uint32_t i) const {
    const int n = horizon();
    std::vector<std::uint32_t> idx(n + 1);
    idx[n] = i;
    for (int p = n; p > 0; --p) idx[p - 1] = ancestors[p - 1][idx[p]];
    return idx;
  }

  std::vector<State> trajectory(std::uint32_t i) const {
    const auto idx = lineage(i);
    std::vector<State> out(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) out[p] = states[p][idx[p]];
    return out;
  }
};

// Output functionals of a run. With W = sum_i V^(i) = L-hat,
//   p-hat(phi_j) = L-hat * (center[j] + centered[j]),
// where center[j] is a reference value and centered[j] = sum_i V^(i)/W (phi_j(X^(i)) - center[j]).
// Centering makes constant test functions come out exact.
struct SmootherEstimate {
  double log_normalizer = kNegInf;
  std::vector<double> center;
  std::vector<double> centered;

  double normalizer() const { return std::exp(log_normalizer); }
  // Self-normalized value p-hat(phi)/p-hat(1); 0 if L-hat = 0.
  double normalized(std::size_t j) const {
    return log_normalizer == kNegInf ? 0.0 : center[j] + centered[j];
  }
  double value(std::size_t j) const { return log_normalizer == kNegInf ? 0.0 : normalizer() * normalized(j); }
};

template <class State>
struct FilterResult {
  ParticleCloud<State> cloud;
  SmootherEstimate estimate;
};

struct FilterOptions {
  ResampleScheme scheme = ResampleScheme::kSystematic;
  // Reference values for centering; default uses phi at particle 0's path.
  std::optional<std::vector<double>> centers;
};

namespace detail {

inline void check_log_potential(double g, int p) {
  if (std::isnan(g) || g == std::numeric_limits<double>::infinity())
    throw ModelError("potential G_" + std::to_string(p) + " is not a finite nonnegative number");
}

// Path argument for transitions / potentials of particle i at step p.
template <class State>
std::span<const State> path_view(const ParticleCloud<State>& cloud, bool path_dependent, int p, std::uint32_t i,
                                 std::vector<State>& buf) {
  if (!path_dependent) return {&cloud.states[p][i], 1};
  buf.resize(p + 1);
  std::uint32_t k = i;
  for (int q = p; q >= 0; --q) {
    buf[q] = cloud.states[q][k];
    if (q > 0) k = cloud.ancestors[q - 1][k];
  }
  return buf;
}

}  // namespace detail

// Runs the Feynman-Kac particle filter with resampling at every step:
//   V_0 = G_0 / N,  V_p = V*_{p-1} G_p / N.
// Returns the cloud only; see smoother_estimate for functionals.
template <FeynmanKacModel M>
ParticleCloud<typename M::State> run_filter_cloud(const M& model, std::size_t N, ResampleScheme scheme,
                                                  RngStream& rng) {
  using State = typename M::State;
  if (N < 1) throw ParameterError("particle filter needs N >= 1");
  const int n = model.horizon();
  if (n < 0) throw ParameterError("model horizon must be >= 0");
  const bool pd = model.path_dependent();
  const double log_n = std::log(static_cast<double>(N));

  ParticleCloud<State> cloud;
  cloud.N = N;
  cloud.states.reserve(n + 1);
  cloud.ancestors.reserve(n);
  std::vector<State> buf;

  cloud.states.emplace_back(N);
  for (std::size_t i = 0; i < N; ++i) cloud.states[0][i] = model.sample_initial(rng);
  cloud.log_weights.assign(N, 0.0);
  for (std::uint32_t i = 0; i < N; ++i) {
    const double g = model.log_potential(0, detail::path_view(cloud, pd, 0, i, buf));
    detail::check_log_potential(g, 0);
    cloud.log_weights[i] = g - log_n;
  }
  cloud.log_totals.push_back(log_sum_exp(cloud.log_weights));

  for (int p = 1; p <= n; ++p) {
    const double prev_total = cloud.log_totals.back();
    if (prev_total == kNegInf) {
      cloud.complete = false;
      break;
    }
    auto anc = resample_log(cloud.log_weights, scheme, rng);
    std::vector<State> next(N);
    for (std::size_t i = 0; i < N; ++i)
      next[i] = model.sample_transition(p, detail::path_view(cloud, pd, p - 1, anc[i], buf), rng);
    cloud.ancestors.push_back(std::move(anc));
    cloud.states.push_back(std::move(next));
    for (std::uint32_t i = 0; i < N; ++i) {
      const double g = model.log_potential(p, detail::path_view(cloud, pd, p, i, buf));
      detail::check_log_potential(g, p);
      cloud.log_weights[i] = prev_total + g - log_n;
    }
    cloud.log_totals.push_back(log_sum_exp(cloud.log_weights));
  }
  return cloud;
}

// Functionals of a scalar-state cloud. Test functions see the full path x_{0:n}.
SmootherEstimate smoother_estimate(const ParticleCloud<double>& cloud, std::span<const PathFunction> functions,
                                   const std::optional<std::vector<double>>& centers = std::nullopt);

template <FeynmanKacModel M>
  requires std::same_as<typename M::State, double>
FilterResult<double> run_particle_filter(const M& model, std::size_t N, RngStream& rng,
                                         std::span<const PathFunction> functions = {},
                                         const FilterOptions& options = {}) {
  FilterResult<double> out;
  out.cloud = run_filter_cloud(model, N, options.scheme, rng);
  out.estimate = smoother_estimate(out.cloud, functions, options.centers);
  return out;
}

}  // namespace mcis

#pragma once

#include <concepts>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "mcis/core/rng.hpp"

namespace mcis {

using ParameterPoint = Eigen::VectorXd;

// A Feynman-Kac model (M_p, G_p), p = 0..n, over states of type State.
//
// `path` holds x_{0:p-1} (for transitions) or x_{0:p} (for potentials) when
// path_dependent() is true. Otherwise it holds only the last state, so a
// non-path-dependent model can read path.back() and nothing else.
//
// log_potential returns log G_p: -inf for a zero potential, never NaN.
template <class M>
concept FeynmanKacModel = requires(const M& m, int p, std::span<const typename M::State> path,
                                   RngStream& rng) {
  typename M::State;
  { m.horizon() } -> std::convertible_to<int>;
  { m.path_dependent() } -> std::convertible_to<bool>;
  { m.sample_initial(rng) } -> std::same_as<typename M::State>;
  { m.sample_transition(p, path, rng) } -> std::same_as<typename M::State>;
  { m.log_potential(p, path) } -> std::convertible_to<double>;
};

// State of a coupled fine/coarse model.
struct CoupledState {
  double fine = 0.0;
  double coarse = 0.0;
};

// Coupling of a level-l model (fine) and a level-(l-1) model (coarse) over a
// shared state. Marginal potentials are exposed so the delta particle filter
// can form its importance weights.
template <class M>
concept CoupledFeynmanKacModel =
    FeynmanKacModel<M> && std::same_as<typename M::State, CoupledState> &&
    requires(const M& m, int p, const CoupledState& x, std::size_t n_particles) {
      { m.level() } -> std::convertible_to<int>;
      { m.log_potential_fine(p, x) } -> std::convertible_to<double>;
      { m.log_potential_coarse(p, x) } -> std::convertible_to<double>;
      { m.cost_units(n_particles) } -> std::convertible_to<double>;
    };

// Test function on a scalar trajectory x_{0:n}.
using PathFunction = std::function<double(std::span<const double>)>;

// Test function f(theta, x_{0:n}) used by the parameter-space samplers.
using ThetaPathFunction = std::function<double(const ParameterPoint&, std::span<const double>)>;

}  // namespace mcis

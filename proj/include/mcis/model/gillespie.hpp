#pragma once

#include <cstdint>
#include <vector>

#include "mcis/core/rng.hpp"

namespace mcis {

// Mass-action reaction network. Reaction r fires with propensity
// rates[r] * prod_s C(x_s, reactants[r][s]) and adds change[r] to the state.
struct ReactionNetwork {
  std::vector<double> rates;
  std::vector<std::vector<int>> reactants;
  std::vector<std::vector<int>> change;

  std::size_t species() const { return change.empty() ? 0 : change.front().size(); }
  std::size_t reactions() const { return rates.size(); }
  void validate() const;
  double propensity(std::size_t r, const std::vector<std::int64_t>& x) const;
};

struct GillespieEvent {
  double time = 0.0;
  int reaction = 0;
};

struct GillespiePath {
  std::vector<std::int64_t> initial;
  std::vector<GillespieEvent> events;
  std::vector<std::int64_t> final_state;
  double t_end = 0.0;
  // True when the event cap was hit before t_end; final_state is then the
  // state at the last simulated event.
  bool truncated = false;

  // State at time t (right-continuous step function), replayed from events.
  std::vector<std::int64_t> state_at(const ReactionNetwork& net, double t) const;
};

// Exact stochastic simulation (direct method). If every propensity is zero the
// path stays frozen until t_end.
GillespiePath gillespie_simulate(const ReactionNetwork& net, const std::vector<std::int64_t>& init, double t_end,
                                 RngStream& rng, std::size_t max_events = 10'000'000);

// States at the given observation times (ascending), flattened species-major
// per time: out[k * species + s].
std::vector<double> gillespie_observe(const ReactionNetwork& net, const std::vector<std::int64_t>& init,
                                      const std::vector<double>& times, RngStream& rng, std::size_t max_events,
                                      bool* truncated = nullptr);

// Prey X1, predator X2: X1 -> 2 X1 (c1), X1 + X2 -> 2 X2 (c2), X2 -> 0 (c3).
ReactionNetwork lotka_volterra(double c1, double c2, double c3);

}  // namespace mcis

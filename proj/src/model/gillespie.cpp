#include "mcis/model/gillespie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcis/core/errors.hpp"

namespace mcis {

void ReactionNetwork::validate() const {
  if (reactants.size() != rates.size() || change.size() != rates.size())
    throw ParameterError("reaction network: rates, reactants and change must have equal length");
  const std::size_t s = species();
  for (std::size_t r = 0; r < rates.size(); ++r) {
    if (!(rates[r] >= 0.0) || !std::isfinite(rates[r])) throw ParameterError("reaction rates must be finite and nonnegative");
    if (reactants[r].size() != s || change[r].size() != s)
      throw ParameterError("reaction network: inconsistent species count");
    for (int k : reactants[r])
      if (k < 0) throw ParameterError("reactant coefficients must be nonnegative");
  }
}

double ReactionNetwork::propensity(std::size_t r, const std::vector<std::int64_t>& x) const {
  double a = rates[r];
  if (a == 0.0) return 0.0;
  for (std::size_t s = 0; s < x.size(); ++s) {
    const int k = reactants[r][s];
    for (int j = 0; j < k; ++j) {
      const double n = static_cast<double>(x[s] - j);
      if (n <= 0.0) return 0.0;
      a *= n / static_cast<double>(j + 1);
    }
  }
  return a;
}

namespace {

void apply(const ReactionNetwork& net, int r, std::vector<std::int64_t>& x) {
  for (std::size_t s = 0; s < x.size(); ++s) x[s] += net.change[r][s];
}

}  // namespace

std::vector<std::int64_t> GillespiePath::state_at(const ReactionNetwork& net, double t) const {
  std::vector<std::int64_t> x = initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    apply(net, e.reaction, x);
  }
  return x;
}

GillespiePath gillespie_simulate(const ReactionNetwork& net, const std::vector<std::int64_t>& init, double t_end,
                                 RngStream& rng, std::size_t max_events) {
  net.validate();
  if (init.size() != net.species()) throw ParameterError("initial state has wrong number of species");
  for (auto v : init)
    if (v < 0) throw ParameterError("initial counts must be nonnegative");

  GillespiePath path;
  path.initial = init;
  path.t_end = t_end;
  std::vector<std::int64_t> x = init;
  std::vector<double> a(net.reactions());
  double t = 0.0;
  for (;;) {
    double total = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      a[r] = net.propensity(r, x);
      total += a[r];
    }
    if (total <= 0.0) break;
    t += rng.exponential() / total;
    if (t > t_end) break;
    if (path.events.size() >= max_events) {
      path.truncated = true;
      break;
    }
    double u = rng.uniform() * total;
    std::size_t r = 0;
    for (; r + 1 < a.size(); ++r) {
      if (u < a[r]) break;
      u -= a[r];
    }
    // guard against roundoff selecting a zero-propensity reaction
    while (a[r] == 0.0 && r > 0) --r;
    apply(net, static_cast<int>(r), x);
    path.events.push_back({t, static_cast<int>(r)});
  }
  path.final_state = x;
  return path;
}

std::vector<double> gillespie_observe(const ReactionNetwork& net, const std::vector<std::int64_t>& init,
                                      const std::vector<double>& times, RngStream& rng, std::size_t max_events,
                                      bool* truncated) {
  const double t_end = times.empty() ? 0.0 : times.back();
  const GillespiePath path = gillespie_simulate(net, init, t_end, rng, max_events);
  if (truncated) *truncated = path.truncated;
  const std::size_t s = net.species();
  std::vector<double> out;
  out.reserve(times.size() * s);
  std::vector<std::int64_t> x = init;
  std::size_t e = 0;
  for (double t : times) {
    while (e < path.events.size() && path.events[e].time <= t) apply(net, path.events[e++].reaction, x);
    for (auto v : x) out.push_back(static_cast<double>(v));
  }
  return out;
}

ReactionNetwork lotka_volterra(double c1, double c2, double c3) {
  ReactionNetwork net;
  net.rates = {c1, c2, c3};
  net.reactants = {{1, 0}, {1, 1}, {0, 1}};
  net.change = {{1, 0}, {-1, 1}, {0, -1}};
  return net;
}

}  // namespace mcis

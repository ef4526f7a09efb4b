#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"
#include "mcis/model/feynman_kac.hpp"
#include "mcis/smc/particle_filter.hpp"

namespace mcis {

// Output of a delta particle filter run at level l. With S = exp(log_scale):
//   Delta(1)   = S * relative_one
//   Delta(phi) = S * (center[j] * relative_one + relative_centered[j])
// Values may be negative.
struct DeltaEstimate {
  int level = 0;
  double log_scale = kNegInf;
  double relative_one = 0.0;
  std::vector<double> center;
  std::vector<double> relative_centered;
  double cost_units = 0.0;

  double one() const { return log_scale == kNegInf ? 0.0 : std::exp(log_scale) * relative_one; }
  double value(std::size_t j) const {
    return log_scale == kNegInf ? 0.0 : std::exp(log_scale) * (center[j] * relative_one + relative_centered[j]);
  }
};

namespace detail {

// Adapter that rejects couplings where the coupled potential vanishes while
// a marginal potential does not.
template <CoupledFeynmanKacModel M>
class SupportChecked {
 public:
  using State = CoupledState;
  explicit SupportChecked(const M& m) : m_(m) {}
  int horizon() const { return m_.horizon(); }
  bool path_dependent() const { return m_.path_dependent(); }
  State sample_initial(RngStream& rng) const { return m_.sample_initial(rng); }
  State sample_transition(int p, std::span<const State> path, RngStream& rng) const {
    return m_.sample_transition(p, path, rng);
  }
  double log_potential(int p, std::span<const State> path) const {
    const double g = m_.log_potential(p, path);
    if (g == kNegInf &&
        (m_.log_potential_fine(p, path.back()) > kNegInf || m_.log_potential_coarse(p, path.back()) > kNegInf))
      throw SupportError("coupled potential is zero while a marginal potential is positive");
    return g;
  }

 private:
  const M& m_;
};

}  // namespace detail

// Particle filter on the coupled model followed by the fine/coarse
// importance weights  w_fine = prod G_fine / prod G_coupled  (and likewise coarse).
// Test functions are applied to the fine and coarse coordinate paths.
template <CoupledFeynmanKacModel M>
DeltaEstimate run_delta_pf(const M& model, std::size_t N, RngStream& rng, std::span<const PathFunction> functions = {},
                           ResampleScheme scheme = ResampleScheme::kMultinomial,
                           const std::optional<std::vector<double>>& centers = std::nullopt) {
  if (model.level() < 1) throw ParameterError("delta particle filter needs level >= 1");
  if (model.path_dependent()) throw ParameterError("delta particle filter supports Markov potentials only");
  const detail::SupportChecked<M> checked(model);
  const auto cloud = run_filter_cloud(checked, N, scheme, rng);
  const std::size_t nf = functions.size();
  if (centers && centers->size() != nf) throw ParameterError("centers must match the number of test functions");

  DeltaEstimate out;
  out.level = model.level();
  out.cost_units = model.cost_units(N);
  out.center = centers ? *centers : std::vector<double>(nf, 0.0);
  out.relative_centered.assign(nf, 0.0);
  if (!cloud.complete || cloud.log_normalizer() == kNegInf) return out;
  out.log_scale = cloud.log_normalizer();

  const int n = cloud.horizon();
  std::vector<double> fine(n + 1);
  std::vector<double> coarse(n + 1);
  std::vector<double> pf(nf);
  std::vector<double> pc(nf);
  bool have_center = centers.has_value();
  double one = 0.0;
  std::vector<double> acc(nf, 0.0);
  for (std::uint32_t i = 0; i < N; ++i) {
    const double v = std::exp(cloud.log_weights[i] - out.log_scale);
    if (v == 0.0 && have_center) continue;
    const auto idx = cloud.lineage(i);
    double log_f = 0.0;
    double log_c = 0.0;
    for (int p = 0; p <= n; ++p) {
      const CoupledState& x = cloud.states[p][idx[p]];
      const std::span<const CoupledState> last(&x, 1);
      const double g = model.log_potential(p, last);
      log_f += model.log_potential_fine(p, x) - g;
      log_c += model.log_potential_coarse(p, x) - g;
      fine[p] = x.fine;
      coarse[p] = x.coarse;
    }
    const double wf = std::exp(log_f);
    const double wc = std::exp(log_c);
    for (std::size_t j = 0; j < nf; ++j) {
      pf[j] = functions[j](fine);
      pc[j] = functions[j](coarse);
    }
    if (!have_center) {
      for (std::size_t j = 0; j < nf; ++j) out.center[j] = pf[j];
      have_center = true;
    }
    if (v == 0.0) continue;
    one += v * (wf - wc);
    for (std::size_t j = 0; j < nf; ++j)
      acc[j] += v * (wf * (pf[j] - out.center[j]) - wc * (pc[j] - out.center[j]));
  }
  out.relative_one = one;
  out.relative_centered = acc;
  return out;
}

}  // namespace mcis

#include "mcis/smc/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"
#include "mcis/smc/ratio.hpp"

namespace mcis {

SmootherEstimate smoother_estimate(const ParticleCloud<double>& cloud, std::span<const PathFunction> functions,
                                   const std::optional<std::vector<double>>& centers) {
  SmootherEstimate est;
  const std::size_t nf = functions.size();
  est.log_normalizer = cloud.complete ? cloud.log_normalizer() : kNegInf;
  est.center.assign(nf, 0.0);
  est.centered.assign(nf, 0.0);
  if (centers && centers->size() != nf) throw ParameterError("centers must match the number of test functions");
  if (nf == 0 || est.log_normalizer == kNegInf) {
    if (centers) est.center = *centers;
    return est;
  }

  const std::size_t N = cloud.N;
  std::vector<std::vector<double>> values(nf, std::vector<double>(N));
  for (std::uint32_t i = 0; i < N; ++i) {
    const auto path = cloud.trajectory(i);
    for (std::size_t j = 0; j < nf; ++j) values[j][i] = functions[j](path);
  }
  std::vector<double> w(N);
  const double total = est.log_normalizer;
  for (std::size_t i = 0; i < N; ++i) w[i] = std::exp(cloud.log_weights[i] - total);
  for (std::size_t j = 0; j < nf; ++j) {
    const double r = centers ? (*centers)[j] : values[j][0];
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      if (w[i] > 0.0) acc += w[i] * (values[j][i] - r);
    est.center[j] = r;
    est.centered[j] = acc;
  }
  return est;
}

RatioEstimate ratio_estimate(std::span<const SmootherEstimate> estimates, std::size_t phi_index) {
  if (estimates.empty()) throw ParameterError("ratio_estimate needs at least one estimate");
  double mx = kNegInf;
  for (const auto& e : estimates) {
    if (phi_index >= e.center.size()) throw ParameterError("ratio_estimate: test function index out of range");
    mx = std::max(mx, e.log_normalizer);
  }
  if (mx == kNegInf) throw DegenerateError("ratio_estimate: all likelihood estimates are zero");

  const std::size_t m = estimates.size();
  std::vector<double> a(m);
  std::vector<double> phi(m);
  double den = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = std::exp(estimates[k].log_normalizer - mx);
    phi[k] = estimates[k].normalized(phi_index);
    den += a[k];
  }
  // reference from the first run with positive weight
  double ref = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    if (a[k] > 0.0) {
      ref = phi[k];
      break;
    }
  double num = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    if (a[k] > 0.0) num += a[k] * (phi[k] - ref);
  RatioEstimate out;
  out.value = ref + num / den;
  if (m < 2) {
    out.standard_error = std::numeric_limits<double>::infinity();
    return out;
  }
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = a[k] * (phi[k] - out.value);
    ss += e * e;
  }
  const double md = static_cast<double>(m);
  out.standard_error = std::sqrt(ss * md / (md - 1.0)) / den;
  return out;
}

nlohmann::json cloud_summary(const ParticleCloud<double>& cloud) {
  nlohmann::json j;
  j["N"] = cloud.N;
  j["horizon"] = cloud.horizon();
  j["complete"] = cloud.complete;
  j["log_totals"] = cloud.log_totals;
  j["log_normalizer"] = cloud.log_normalizer();
  j["log_weights"] = cloud.log_weights;
  {
    const double total = cloud.log_normalizer();
    double s2 = 0.0;
    for (double lw : cloud.log_weights) {
      const double w = total == kNegInf ? 0.0 : std::exp(lw - total);
      s2 += w * w;
    }
    j["final_ess"] = s2 > 0.0 ? 1.0 / s2 : 0.0;
  }
  std::vector<double> means;
  for (const auto& step : cloud.states) {
    double s = 0.0;
    for (double x : step) s += x;
    means.push_back(step.empty() ? 0.0 : s / static_cast<double>(step.size()));
  }
  j["state_means"] = means;
  return j;
}

}  // namespace mcis

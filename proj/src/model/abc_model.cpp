#include "mcis/model/abc_model.hpp"

#include <cmath>
#include <limits>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

double AbcModel::distance(const std::vector<double>& a, const std::vector<double>& b) const {
  if (a.size() != b.size()) throw ModelError("distance between observations of different length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

GaussianAbcModel::GaussianAbcModel(double sigma, double y_star) : sigma_(sigma), y_star_{y_star} {
  if (!(sigma > 0.0)) throw ParameterError("Gaussian ABC model needs sigma > 0");
}

std::vector<double> GaussianAbcModel::simulate(const ParameterPoint& theta, RngStream& rng) const {
  return {theta[0] + sigma_ * rng.normal()};
}

double gaussian_abc_likelihood(double theta, double sigma, double epsilon, double y_star) {
  if (!(epsilon > 0.0)) throw ParameterError("ABC tolerance must be positive");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
  const double hi = (y_star + epsilon - theta) / sigma;
  const double lo = (y_star - epsilon - theta) / sigma;
  // upper tail form keeps precision when both bounds are far right
  if (lo > 0.0) return 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
  return normal_cdf(hi) - normal_cdf(lo);
}

LotkaVolterraAbcModel::LotkaVolterraAbcModel(std::vector<std::int64_t> init, std::vector<double> times,
                                             std::vector<double> y_star, std::size_t max_events)
    : init_(std::move(init)), times_(std::move(times)), y_star_(std::move(y_star)), max_events_(max_events) {
  if (init_.size() != 2) throw ParameterError("Lotka-Volterra model needs two initial counts");
  if (y_star_.size() != 2 * times_.size()) throw ParameterError("Lotka-Volterra observation length mismatch");
}

std::vector<double> LotkaVolterraAbcModel::simulate(const ParameterPoint& theta, RngStream& rng) const {
  if (theta.size() != 3) throw ParameterError("Lotka-Volterra model needs three log-rates");
  const ReactionNetwork net = lotka_volterra(std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2]));
  return gillespie_observe(net, init_, times_, rng, max_events_);
}

double LotkaVolterraAbcModel::simulate_distance(const ParameterPoint& theta, RngStream& rng) const {
  if (theta.size() != 3) throw ParameterError("Lotka-Volterra model needs three log-rates");
  const ReactionNetwork net = lotka_volterra(std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2]));
  bool truncated = false;
  const auto y = gillespie_observe(net, init_, times_, rng, max_events_, &truncated);
  if (truncated) return std::numeric_limits<double>::infinity();
  return distance(y, y_star_);
}

}  // namespace mcis

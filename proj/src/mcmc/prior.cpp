#include "mcis/mcmc/prior.hpp"

#include <cmath>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

UniformPrior::UniformPrior(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) throw ParameterError("uniform prior bounds mismatch");
  log_volume_ = 0.0;
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(upper_[i] > lower_[i]) || !std::isfinite(upper_[i] - lower_[i]))
      throw ParameterError("uniform prior needs finite lower < upper");
    log_volume_ += std::log(upper_[i] - lower_[i]);
  }
}

double UniformPrior::log_density(const ParameterPoint& theta) const {
  if (theta.size() != lower_.size()) throw ParameterError("parameter dimension mismatch");
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return kNegInf;
  return -log_volume_;
}

ParameterPoint UniformPrior::sample(RngStream& rng) const {
  ParameterPoint t(lower_.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = lower_[i] + (upper_[i] - lower_[i]) * rng.uniform();
  return t;
}

GaussianPrior::GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd sd) : mean_(std::move(mean)), sd_(std::move(sd)) {
  if (mean_.size() == 0 || mean_.size() != sd_.size()) throw ParameterError("Gaussian prior size mismatch");
  for (Eigen::Index i = 0; i < sd_.size(); ++i)
    if (!(sd_[i] > 0.0)) throw ParameterError("Gaussian prior sd must be positive");
}

double GaussianPrior::log_density(const ParameterPoint& theta) const {
  if (theta.size() != mean_.size()) throw ParameterError("parameter dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) s += normal_log_pdf(theta[i], mean_[i], sd_[i] * sd_[i]);
  return s;
}

ParameterPoint GaussianPrior::sample(RngStream& rng) const {
  ParameterPoint t(mean_.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = mean_[i] + sd_[i] * rng.normal();
  return t;
}

}  // namespace mcis

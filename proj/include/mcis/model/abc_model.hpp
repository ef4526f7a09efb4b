#pragma once

#include <cstdint>
#include <vector>

#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"
#include "mcis/model/gillespie.hpp"

namespace mcis {

// Simulator-based model with a pseudo-metric and a fixed observation y*.
// The prior lives with the sampler (see mcmc/prior.hpp).
class AbcModel {
 public:
  virtual ~AbcModel() = default;

  virtual std::vector<double> simulate(const ParameterPoint& theta, RngStream& rng) const = 0;
  virtual double distance(const std::vector<double>& a, const std::vector<double>& b) const;
  virtual const std::vector<double>& observation() const = 0;

  // d(Y, y*) for Y ~ p^(theta).
  virtual double simulate_distance(const ParameterPoint& theta, RngStream& rng) const {
    return distance(simulate(theta, rng), observation());
  }
};

// Y ~ N(theta_0, sigma^2), d = |y - y'|.
class GaussianAbcModel : public AbcModel {
 public:
  GaussianAbcModel(double sigma, double y_star);

  std::vector<double> simulate(const ParameterPoint& theta, RngStream& rng) const override;
  const std::vector<double>& observation() const override { return y_star_; }
  double sigma() const { return sigma_; }

 private:
  double sigma_;
  std::vector<double> y_star_;
};

// P(|Y - y*| <= eps), Y ~ N(theta, sigma^2).
double gaussian_abc_likelihood(double theta, double sigma, double epsilon, double y_star);

// Lotka-Volterra counts observed at fixed times; theta = log(c1, c2, c3).
// Euclidean distance over all observed counts. A simulation that hits the
// event cap is assigned distance +inf (never accepted).
class LotkaVolterraAbcModel : public AbcModel {
 public:
  LotkaVolterraAbcModel(std::vector<std::int64_t> init, std::vector<double> times, std::vector<double> y_star,
                        std::size_t max_events = 100000);

  std::vector<double> simulate(const ParameterPoint& theta, RngStream& rng) const override;
  const std::vector<double>& observation() const override { return y_star_; }
  double simulate_distance(const ParameterPoint& theta, RngStream& rng) const override;

 private:
  std::vector<std::int64_t> init_;
  std::vector<double> times_;
  std::vector<double> y_star_;
  std::size_t max_events_;
};

}  // namespace mcis

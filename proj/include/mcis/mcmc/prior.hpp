#pragma once

#include <memory>

#include <Eigen/Dense>

#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"

namespace mcis {

class Prior {
 public:
  virtual ~Prior() = default;
  virtual int dimension() const = 0;
  // -inf outside the support.
  virtual double log_density(const ParameterPoint& theta) const = 0;
  virtual ParameterPoint sample(RngStream& rng) const = 0;
};

// Independent uniforms on the box [lower, upper].
class UniformPrior : public Prior {
 public:
  UniformPrior(Eigen::VectorXd lower, Eigen::VectorXd upper);
  int dimension() const override { return static_cast<int>(lower_.size()); }
  double log_density(const ParameterPoint& theta) const override;
  ParameterPoint sample(RngStream& rng) const override;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  double log_volume_;
};

// Independent normals.
class GaussianPrior : public Prior {
 public:
  GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd sd);
  int dimension() const override { return static_cast<int>(mean_.size()); }
  double log_density(const ParameterPoint& theta) const override;
  ParameterPoint sample(RngStream& rng) const override;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
};

}  // namespace mcis

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"
#include "mcis/model/lgssm.hpp"

namespace mcis {

// Scalar SDE coefficients dX = a(X) dt + b(X) dW, with theta already bound.
class Diffusion {
 public:
  enum class Kind { kOrnsteinUhlenbeck, kGeometricBrownian, kCustom };

  // a(x) = alpha x, b(x) = sigma
  static Diffusion ornstein_uhlenbeck(double alpha, double sigma);
  // a(x) = mu x, b(x) = sigma x
  static Diffusion geometric_brownian(double mu, double sigma);
  static Diffusion custom(std::function<double(double)> drift, std::function<double(double)> diffusion);

  double drift(double x) const {
    switch (kind_) {
      case Kind::kOrnsteinUhlenbeck:
      case Kind::kGeometricBrownian:
        return first_ * x;
      case Kind::kCustom:
        break;
    }
    return custom_drift_(x);
  }

  double diffusion(double x) const {
    switch (kind_) {
      case Kind::kOrnsteinUhlenbeck:
        return second_;
      case Kind::kGeometricBrownian:
        return second_ * x;
      case Kind::kCustom:
        break;
    }
    return custom_diffusion_(x);
  }

  Kind kind() const { return kind_; }
  double first() const { return first_; }
  double second() const { return second_; }

 private:
  Kind kind_ = Kind::kCustom;
  double first_ = 0.0;
  double second_ = 0.0;
  std::function<double(double)> custom_drift_;
  std::function<double(double)> custom_diffusion_;
};

// A discretely observed diffusion: X_0 ~ N(m0, P0), observations
// y_p ~ N(X_{t_p}, obs_variance) at spacing `interval`. The level-0 Euler mesh
// equals the interval; level l uses 2^l substeps per interval.
struct DiffusionSSM {
  Diffusion diffusion = Diffusion::ornstein_uhlenbeck(-1.0, 1.0);
  std::vector<double> observations;
  double obs_variance = 1.0;
  double interval = 1.0;
  double m0 = 0.0;
  double P0 = 0.0;
  std::vector<double> theta;  // for error reports only

  int horizon() const { return static_cast<int>(observations.size()) - 1; }
  double log_potential(int p, double x) const;
  void validate() const;
};

class EulerDiffusionModel {
 public:
  using State = double;

  EulerDiffusionModel(std::shared_ptr<const DiffusionSSM> ssm, int level);

  int horizon() const { return ssm_->horizon(); }
  bool path_dependent() const { return false; }
  double sample_initial(RngStream& rng) const;
  double sample_transition(int p, std::span<const double> path, RngStream& rng) const;
  double log_potential(int p, std::span<const double> path) const {
    return ssm_->log_potential(p, path.back());
  }

  int level() const { return level_; }
  long substeps() const { return substeps_; }
  double mesh() const { return mesh_; }
  const DiffusionSSM& ssm() const { return *ssm_; }
  // N particles times Euler substeps over the whole horizon.
  double cost_units(std::size_t n_particles) const;

  // x + a(x) h + b(x) dW; throws NumericalError on a non-finite result.
  double step(double x, double dW) const;

 private:
  std::shared_ptr<const DiffusionSSM> ssm_;
  int level_;
  long substeps_;
  double mesh_;
  double sqrt_mesh_;
};

double euler_step(const EulerDiffusionModel& model, double x, double dW);

// Level l (fine) and l-1 (coarse) Euler chains driven by a common Brownian
// path; coupled potential is the arithmetic mean of the two marginal potentials.
class CoupledEulerModel {
 public:
  using State = CoupledState;

  CoupledEulerModel(std::shared_ptr<const DiffusionSSM> ssm, int level);

  int horizon() const { return fine_.horizon(); }
  bool path_dependent() const { return false; }
  int level() const { return fine_.level(); }
  CoupledState sample_initial(RngStream& rng) const;
  CoupledState sample_transition(int p, std::span<const CoupledState> path, RngStream& rng) const;
  double log_potential(int p, std::span<const CoupledState> path) const;
  double log_potential_fine(int p, const CoupledState& x) const { return fine_.ssm().log_potential(p, x.fine); }
  double log_potential_coarse(int p, const CoupledState& x) const { return fine_.ssm().log_potential(p, x.coarse); }
  // N particles x fine substeps x 2 (both paths advanced).
  double cost_units(std::size_t n_particles) const;

  const EulerDiffusionModel& fine() const { return fine_; }
  const EulerDiffusionModel& coarse() const { return coarse_; }

 private:
  EulerDiffusionModel fine_;
  EulerDiffusionModel coarse_;
};

// Advances both coordinates over one inter-observation interval. Each coarse
// increment is the sum of the two fine increments it spans.
std::pair<double, double> coupled_euler_interval(const CoupledEulerModel& model, double x_fine,
                                                 double x_coarse, RngStream& rng);

// Level-indexed family of Euler models for one parameter value.
class EulerModelFamily {
 public:
  explicit EulerModelFamily(std::shared_ptr<const DiffusionSSM> ssm) : ssm_(std::move(ssm)) {}
  explicit EulerModelFamily(DiffusionSSM ssm) : ssm_(std::make_shared<const DiffusionSSM>(std::move(ssm))) {}

  EulerDiffusionModel level_model(int level) const { return {ssm_, level}; }
  CoupledEulerModel coupled_model(int level) const { return {ssm_, level}; }
  int horizon() const { return ssm_->horizon(); }
  const DiffusionSSM& ssm() const { return *ssm_; }

 private:
  std::shared_ptr<const DiffusionSSM> ssm_;
};

// For an Ornstein-Uhlenbeck diffusion the Euler chain at any level is itself
// linear-Gaussian; these give the equivalent LGSSMs for the Kalman oracle.
LinearGaussianSSM ou_euler_lgssm(const DiffusionSSM& ssm, int level);
LinearGaussianSSM ou_exact_lgssm(const DiffusionSSM& ssm);

}  // namespace mcis

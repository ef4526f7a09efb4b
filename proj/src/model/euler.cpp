#include "mcis/model/euler.hpp"

#include <cmath>
#include <sstream>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

Diffusion Diffusion::ornstein_uhlenbeck(double alpha, double sigma) {
  Diffusion d;
  d.kind_ = Kind::kOrnsteinUhlenbeck;
  d.first_ = alpha;
  d.second_ = sigma;
  return d;
}

Diffusion Diffusion::geometric_brownian(double mu, double sigma) {
  Diffusion d;
  d.kind_ = Kind::kGeometricBrownian;
  d.first_ = mu;
  d.second_ = sigma;
  return d;
}

Diffusion Diffusion::custom(std::function<double(double)> drift, std::function<double(double)> diffusion) {
  Diffusion d;
  d.kind_ = Kind::kCustom;
  d.custom_drift_ = std::move(drift);
  d.custom_diffusion_ = std::move(diffusion);
  return d;
}

double DiffusionSSM::log_potential(int p, double x) const {
  return normal_log_pdf(observations[p], x, obs_variance);
}

void DiffusionSSM::validate() const {
  if (observations.empty()) throw ParameterError("diffusion model needs at least one observation");
  if (!(obs_variance > 0.0)) throw ParameterError("observation variance must be positive");
  if (!(interval > 0.0)) throw ParameterError("observation interval must be positive");
  if (!(P0 >= 0.0)) throw ParameterError("initial variance must be nonnegative");
}

EulerDiffusionModel::EulerDiffusionModel(std::shared_ptr<const DiffusionSSM> ssm, int level)
    : ssm_(std::move(ssm)), level_(level) {
  if (level < 0 || level > 62) throw ParameterError("Euler level must be in [0, 62]");
  ssm_->validate();
  substeps_ = 1L << level;
  mesh_ = std::ldexp(ssm_->interval, -level);
  sqrt_mesh_ = std::sqrt(mesh_);
}

double EulerDiffusionModel::step(double x, double dW) const {
  const Diffusion& d = ssm_->diffusion;
  const double next = x + d.drift(x) * mesh_ + d.diffusion(x) * dW;
  if (!std::isfinite(next)) {
    std::ostringstream msg;
    msg << "Euler step overflow at x=" << x << " level=" << level_;
    throw NumericalError(msg.str(), x, ssm_->theta, level_);
  }
  return next;
}

double euler_step(const EulerDiffusionModel& model, double x, double dW) { return model.step(x, dW); }

double EulerDiffusionModel::sample_initial(RngStream& rng) const {
  return ssm_->m0 + std::sqrt(ssm_->P0) * rng.normal();
}

double EulerDiffusionModel::sample_transition(int, std::span<const double> path, RngStream& rng) const {
  double x = path.back();
  for (long k = 0; k < substeps_; ++k) x = step(x, sqrt_mesh_ * rng.normal());
  return x;
}

double EulerDiffusionModel::cost_units(std::size_t n_particles) const {
  return static_cast<double>(n_particles) * static_cast<double>(substeps_) * ssm_->horizon();
}

CoupledEulerModel::CoupledEulerModel(std::shared_ptr<const DiffusionSSM> ssm, int level)
    : fine_(ssm, level), coarse_(ssm, level - 1 < 0 ? 0 : level - 1) {
  if (level < 1) throw ParameterError("coupled Euler model needs fine level >= 1");
}

CoupledState CoupledEulerModel::sample_initial(RngStream& rng) const {
  const double x0 = fine_.sample_initial(rng);
  return {x0, x0};
}

std::pair<double, double> coupled_euler_interval(const CoupledEulerModel& model, double x_fine,
                                                 double x_coarse, RngStream& rng) {
  const EulerDiffusionModel& fine = model.fine();
  const EulerDiffusionModel& coarse = model.coarse();
  const double sd = std::sqrt(fine.mesh());
  for (long k = 0; k < coarse.substeps(); ++k) {
    const double dw1 = sd * rng.normal();
    const double dw2 = sd * rng.normal();
    x_fine = fine.step(fine.step(x_fine, dw1), dw2);
    x_coarse = coarse.step(x_coarse, dw1 + dw2);
  }
  return {x_fine, x_coarse};
}

CoupledState CoupledEulerModel::sample_transition(int, std::span<const CoupledState> path, RngStream& rng) const {
  const auto [f, c] = coupled_euler_interval(*this, path.back().fine, path.back().coarse, rng);
  return {f, c};
}

double CoupledEulerModel::log_potential(int p, std::span<const CoupledState> path) const {
  return log_add_exp(log_potential_fine(p, path.back()), log_potential_coarse(p, path.back())) -
         std::numbers::ln2;
}

double CoupledEulerModel::cost_units(std::size_t n_particles) const {
  return 2.0 * fine_.cost_units(n_particles);
}

LinearGaussianSSM ou_euler_lgssm(const DiffusionSSM& ssm, int level) {
  if (ssm.diffusion.kind() != Diffusion::Kind::kOrnsteinUhlenbeck)
    throw ParameterError("Kalman oracle requires an Ornstein-Uhlenbeck diffusion");
  const EulerDiffusionModel model(std::make_shared<const DiffusionSSM>(ssm), level);
  const double a = 1.0 + ssm.diffusion.first() * model.mesh();
  const double sigma2 = ssm.diffusion.second() * ssm.diffusion.second();
  double coef = 1.0;
  double var = 0.0;
  for (long k = 0; k < model.substeps(); ++k) {
    var = a * a * var + sigma2 * model.mesh();
    coef *= a;
  }
  LinearGaussianSSM out;
  out.A = coef;
  out.Q = var;
  out.H = 1.0;
  out.R = ssm.obs_variance;
  out.m0 = ssm.m0;
  out.P0 = ssm.P0;
  out.y = ssm.observations;
  return out;
}

LinearGaussianSSM ou_exact_lgssm(const DiffusionSSM& ssm) {
  if (ssm.diffusion.kind() != Diffusion::Kind::kOrnsteinUhlenbeck)
    throw ParameterError("Kalman oracle requires an Ornstein-Uhlenbeck diffusion");
  const double alpha = ssm.diffusion.first();
  const double sigma2 = ssm.diffusion.second() * ssm.diffusion.second();
  LinearGaussianSSM out;
  out.A = std::exp(alpha * ssm.interval);
  out.Q = alpha == 0.0 ? sigma2 * ssm.interval : sigma2 * std::expm1(2.0 * alpha * ssm.interval) / (2.0 * alpha);
  out.H = 1.0;
  out.R = ssm.obs_variance;
  out.m0 = ssm.m0;
  out.P0 = ssm.P0;
  out.y = ssm.observations;
  return out;
}

}  // namespace mcis

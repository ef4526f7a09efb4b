#include "mcis/model/lgssm.hpp"

#include <cmath>
#include <string>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

void LinearGaussianSSM::validate() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(A) || !finite(H) || !finite(m0)) throw ParameterError("LGSSM coefficients must be finite");
  if (!finite(R) || R <= 0.0) throw ParameterError("LGSSM observation variance R must be positive, got " + std::to_string(R));
  if (!finite(Q) || Q < 0.0) throw ParameterError("LGSSM transition variance Q must be nonnegative, got " + std::to_string(Q));
  if (!finite(P0) || P0 < 0.0) throw ParameterError("LGSSM initial variance P0 must be nonnegative, got " + std::to_string(P0));
  if (y.empty()) throw ParameterError("LGSSM needs at least one observation");
}

LgssmModel::LgssmModel(LinearGaussianSSM params)
    : params_(std::move(params)), init_sd_(std::sqrt(params_.P0)), trans_sd_(std::sqrt(params_.Q)) {
  params_.validate();
}

double LgssmModel::sample_initial(RngStream& rng) const {
  return params_.m0 + init_sd_ * rng.normal();
}

double LgssmModel::sample_transition(int, std::span<const double> path, RngStream& rng) const {
  return params_.A * path.back() + trans_sd_ * rng.normal();
}

double LgssmModel::log_potential(int p, std::span<const double> path) const {
  return normal_log_pdf(params_.y[p], params_.H * path.back(), params_.R);
}

namespace {

struct FilterPass {
  std::vector<double> filt_mean, filt_var, pred_mean, pred_var;
  double loglik = 0.0;
};

FilterPass kalman_filter(const LinearGaussianSSM& m) {
  m.validate();
  const int n = m.horizon();
  FilterPass out;
  out.filt_mean.resize(n + 1);
  out.filt_var.resize(n + 1);
  out.pred_mean.resize(n + 1);
  out.pred_var.resize(n + 1);
  double mean = m.m0;
  double var = m.P0;
  for (int p = 0; p <= n; ++p) {
    if (p > 0) {
      mean = m.A * mean;
      var = m.A * m.A * var + m.Q;
    }
    out.pred_mean[p] = mean;
    out.pred_var[p] = var;
    const double s = m.H * m.H * var + m.R;
    out.loglik += normal_log_pdf(m.y[p], m.H * mean, s);
    const double gain = var * m.H / s;
    mean += gain * (m.y[p] - m.H * mean);
    var = std::max(0.0, var - gain * m.H * var);
    out.filt_mean[p] = mean;
    out.filt_var[p] = var;
  }
  return out;
}

}  // namespace

double kalman_loglik(const LinearGaussianSSM& model) { return kalman_filter(model).loglik; }

std::vector<double> kalman_smoother_means(const LinearGaussianSSM& model) {
  const FilterPass f = kalman_filter(model);
  const int n = model.horizon();
  std::vector<double> smoothed(n + 1);
  smoothed[n] = f.filt_mean[n];
  for (int p = n - 1; p >= 0; --p) {
    const double pv = f.pred_var[p + 1];
    const double gain = pv > 0.0 ? f.filt_var[p] * model.A / pv : 0.0;
    smoothed[p] = f.filt_mean[p] + gain * (smoothed[p + 1] - f.pred_mean[p + 1]);
  }
  return smoothed;
}

std::vector<double> simulate_lgssm(const LinearGaussianSSM& model, int horizon, RngStream& rng) {
  if (horizon < 0) throw ParameterError("horizon must be >= 0");
  std::vector<double> y(horizon + 1);
  double x = model.m0 + std::sqrt(model.P0) * rng.normal();
  for (int p = 0; p <= horizon; ++p) {
    if (p > 0) x = model.A * x + std::sqrt(model.Q) * rng.normal();
    y[p] = model.H * x + std::sqrt(model.R) * rng.normal();
  }
  return y;
}

}  // namespace mcis

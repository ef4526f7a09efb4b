#pragma once

#include <span>
#include <vector>

#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"

namespace mcis {

// Scalar linear-Gaussian state space model
//   X_0 ~ N(m0, P0),  X_p = A X_{p-1} + N(0, Q),  Y_p = H X_p + N(0, R).
struct LinearGaussianSSM {
  double A = 1.0;
  double Q = 1.0;
  double H = 1.0;
  double R = 1.0;
  double m0 = 0.0;
  double P0 = 1.0;
  std::vector<double> y;

  int horizon() const { return static_cast<int>(y.size()) - 1; }
  // Throws ParameterError. R must be positive; Q and P0 may be zero.
  void validate() const;
};

// The LGSSM as a Feynman-Kac model with G_p(x) = N(y_p; H x, R).
class LgssmModel {
 public:
  using State = double;

  explicit LgssmModel(LinearGaussianSSM params);

  int horizon() const { return params_.horizon(); }
  bool path_dependent() const { return false; }
  double sample_initial(RngStream& rng) const;
  double sample_transition(int p, std::span<const double> path, RngStream& rng) const;
  double log_potential(int p, std::span<const double> path) const;

  const LinearGaussianSSM& params() const { return params_; }

 private:
  LinearGaussianSSM params_;
  double init_sd_;
  double trans_sd_;
};

// Exact log p(y_{0:n}) by the Kalman forward recursion.
double kalman_loglik(const LinearGaussianSSM& model);

// Exact E[X_p | y_{0:n}], p = 0..n (Rauch-Tung-Striebel backward pass).
std::vector<double> kalman_smoother_means(const LinearGaussianSSM& model);

// Draws y_{0:n} from the model (the y field of `model` is ignored).
std::vector<double> simulate_lgssm(const LinearGaussianSSM& model, int horizon, RngStream& rng);

}  // namespace mcis

#pragma once

#include <Eigen/Dense>

#include "mcis/core/rng.hpp"
#include "mcis/model/feynman_kac.hpp"

namespace mcis {

// Gaussian random-walk proposal N(theta, cov). Adaptive updates keep a
// running mean and empirical covariance C and set cov = (2.38^2 / d) C + 1e-10 I.
class ProposalState {
 public:
  ProposalState() : ProposalState(Eigen::MatrixXd::Identity(1, 1)) {}
  explicit ProposalState(Eigen::MatrixXd cov);
  static ProposalState isotropic(int dim, double sd);

  const Eigen::MatrixXd& covariance() const { return cov_; }
  void set_covariance(Eigen::MatrixXd cov);
  // cov^{1/2} (symmetric square root, valid for semidefinite cov)
  const Eigen::MatrixXd& root() const { return root_; }
  int dimension() const { return static_cast<int>(cov_.rows()); }

  long step() const { return step_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  const Eigen::VectorXd& running_mean() const { return mean_; }
  const Eigen::MatrixXd& empirical_covariance() const { return emp_; }

  static constexpr double kJitter = 1e-10;

 private:
  friend ProposalState adapt_covariance(const ProposalState& prop, const ParameterPoint& x, long k);

  Eigen::MatrixXd cov_;
  Eigen::MatrixXd root_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd emp_;
  long step_ = 0;
  bool frozen_ = false;
};

ParameterPoint propose(const ParameterPoint& current, const ProposalState& prop, RngStream& rng);

// log q(to | from); symmetric in (to, from). -inf off the proposal support
// when cov is singular.
double proposal_log_density(const ParameterPoint& to, const ParameterPoint& from, const ProposalState& prop);

// Recursive mean/covariance update with gamma_k = k^{-2/3} (k >= 1):
//   mu <- mu + gamma (x - mu),  C <- C + gamma ((x - mu_old)(x - mu_old)' - C).
// Returns the input unchanged if frozen.
ProposalState adapt_covariance(const ProposalState& prop, const ParameterPoint& x, long k);

}  // namespace mcis

#include "mcis/mcmc/proposal.hpp"

#include <cmath>
#include <numbers>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

namespace {

Eigen::MatrixXd symmetric_root(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw ParameterError("proposal covariance decomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-12 * std::max(1.0, std::abs(ev.maxCoeff())))
      throw ParameterError("proposal covariance is not positive semidefinite");
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

ProposalState::ProposalState(Eigen::MatrixXd cov) { set_covariance(std::move(cov)); }

ProposalState ProposalState::isotropic(int dim, double sd) {
  return ProposalState(Eigen::MatrixXd::Identity(dim, dim) * (sd * sd));
}

void ProposalState::set_covariance(Eigen::MatrixXd cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols()) throw ParameterError("proposal covariance must be square");
  if (!cov.allFinite()) throw ParameterError("proposal covariance must be finite");
  cov = 0.5 * (cov + cov.transpose());
  root_ = symmetric_root(cov);
  cov_ = std::move(cov);
  if (mean_.size() != cov_.rows()) {
    mean_ = Eigen::VectorXd::Zero(cov_.rows());
    emp_ = cov_ * (static_cast<double>(cov_.rows()) / (2.38 * 2.38));
  }
}

ParameterPoint propose(const ParameterPoint& current, const ProposalState& prop, RngStream& rng) {
  if (current.size() != prop.dimension()) throw ParameterError("proposal dimension mismatch");
  Eigen::VectorXd z(current.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return current + prop.root() * z;
}

double proposal_log_density(const ParameterPoint& to, const ParameterPoint& from, const ProposalState& prop) {
  const Eigen::VectorXd d = to - from;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(prop.covariance());
  const Eigen::VectorXd sol = ldlt.solve(d);
  const Eigen::VectorXd diag = ldlt.vectorD();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) return kNegInf;
    logdet += std::log(diag[i]);
  }
  const double dim = static_cast<double>(d.size());
  return -0.5 * (dim * std::log(2.0 * std::numbers::pi) + logdet + d.dot(sol));
}

ProposalState adapt_covariance(const ProposalState& prop, const ParameterPoint& x, long k) {
  if (prop.frozen_) return prop;
  if (k < 1) throw ParameterError("adaptation step must be >= 1");
  if (x.size() != prop.dimension()) throw ParameterError("adaptation sample dimension mismatch");
  ProposalState out = prop;
  const double gamma = std::pow(static_cast<double>(k), -2.0 / 3.0);
  const Eigen::VectorXd diff = x - prop.mean_;
  out.mean_ = prop.mean_ + gamma * diff;
  out.emp_ = prop.emp_ + gamma * (diff * diff.transpose() - prop.emp_);
  const int d = prop.dimension();
  const Eigen::MatrixXd cov =
      (2.38 * 2.38 / d) * out.emp_ + ProposalState::kJitter * Eigen::MatrixXd::Identity(d, d);
  out.cov_ = 0.5 * (cov + cov.transpose());
  out.root_ = symmetric_root(out.cov_);
  out.step_ = k;
  return out;
}

}  // namespace mcis

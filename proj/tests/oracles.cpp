#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace oracle {

namespace {

struct Joint {
  Eigen::VectorXd mx;
  Eigen::MatrixXd cx;
};

Joint latent_moments(const mcis::LinearGaussianSSM& m) {
  const int n = static_cast<int>(m.y.size());
  Joint j;
  j.mx.resize(n);
  j.cx.resize(n, n);
  std::vector<double> var(n);
  double mean = m.m0;
  double v = m.P0;
  for (int p = 0; p < n; ++p) {
    if (p > 0) {
      mean *= m.A;
      v = m.A * m.A * v + m.Q;
    }
    j.mx[p] = mean;
    var[p] = v;
  }
  for (int p = 0; p < n; ++p)
    for (int q = p; q < n; ++q) {
      const double c = std::pow(m.A, q - p) * var[p];
      j.cx(p, q) = c;
      j.cx(q, p) = c;
    }
  return j;
}

}  // namespace

double joint_gaussian_loglik(const mcis::LinearGaussianSSM& m) {
  const Joint j = latent_moments(m);
  const int n = static_cast<int>(m.y.size());
  const Eigen::MatrixXd cy = m.H * m.H * j.cx + m.R * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n);
  for (int p = 0; p < n; ++p) r[p] = m.y[p] - m.H * j.mx[p];
  Eigen::LLT<Eigen::MatrixXd> llt(cy);
  const Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (int p = 0; p < n; ++p) logdet += 2.0 * std::log(L(p, p));
  const double quad = r.dot(llt.solve(r));
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

std::vector<double> joint_gaussian_smoother(const mcis::LinearGaussianSSM& m) {
  const Joint j = latent_moments(m);
  const int n = static_cast<int>(m.y.size());
  const Eigen::MatrixXd cy = m.H * m.H * j.cx + m.R * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd cxy = m.H * j.cx;
  Eigen::VectorXd r(n);
  for (int p = 0; p < n; ++p) r[p] = m.y[p] - m.H * j.mx[p];
  const Eigen::VectorXd post = j.mx + cxy * cy.ldlt().solve(r);
  return {post.data(), post.data() + n};
}

double quadrature_mean(const std::function<double(double)>& logw, const std::function<double(double)>& f, double a,
                       double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  std::vector<double> lw(intervals + 1);
  double mx = -INFINITY;
  for (int i = 0; i <= intervals; ++i) {
    lw[i] = logw(a + i * h);
    mx = std::max(mx, lw[i]);
  }
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double w = c * std::exp(lw[i] - mx);
    num += w * f(a + i * h);
    den += w;
  }
  return num / den;
}

std::vector<double> ar1(double phi, std::size_t n, unsigned long long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  double v = z(gen) / std::sqrt(1.0 - phi * phi);
  for (auto& e : x) {
    v = phi * v + z(gen);
    e = v;
  }
  return x;
}

mcis::LinearGaussianSSM euler_ou(double alpha, double sigma, double interval, int level, double obs_var, double m0,
                                 double P0, std::vector<double> y) {
  const long k = 1L << level;
  const double h = interval / static_cast<double>(k);
  const double a = 1.0 + alpha * h;
  double A = 1.0, Q = 0.0;
  for (long i = 0; i < k; ++i) {
    Q = a * a * Q + sigma * sigma * h;
    A *= a;
  }
  mcis::LinearGaussianSSM m;
  m.A = A;
  m.Q = Q;
  m.H = 1.0;
  m.R = obs_var;
  m.m0 = m0;
  m.P0 = P0;
  m.y = std::move(y);
  return m;
}

mcis::LinearGaussianSSM exact_ou(double alpha, double sigma, double interval, double obs_var, double m0, double P0,
                                 std::vector<double> y) {
  mcis::LinearGaussianSSM m;
  m.A = std::exp(alpha * interval);
  m.Q = sigma * sigma * std::expm1(2.0 * alpha * interval) / (2.0 * alpha);
  m.H = 1.0;
  m.R = obs_var;
  m.m0 = m0;
  m.P0 = P0;
  m.y = std::move(y);
  return m;
}

double gaussian_box_loglik(double theta, double sigma, double eps, double y_star) {
  const double hi = (y_star + eps - theta) / sigma;
  const double lo = (y_star - eps - theta) / sigma;
  // mirror to the left tail so the difference does not cancel
  if (lo > 0.0) return std::log(0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2)));
  return std::log(0.5 * (std::erfc(-hi / std::numbers::sqrt2) - std::erfc(-lo / std::numbers::sqrt2)));
}

}  // namespace oracle

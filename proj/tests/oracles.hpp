#pragma once

#include <functional>
#include <vector>

#include "mcis/model/lgssm.hpp"

namespace oracle {

// log p(y_{0:n}) by direct evaluation of the joint Gaussian density of Y.
double joint_gaussian_loglik(const mcis::LinearGaussianSSM& m);

// E[X_p | y_{0:n}] by Gaussian conditioning on the joint covariance.
std::vector<double> joint_gaussian_smoother(const mcis::LinearGaussianSSM& m);

// int f(t) exp(logw(t)) dt / int exp(logw(t)) dt on [a, b], composite Simpson.
double quadrature_mean(const std::function<double(double)>& logw, const std::function<double(double)>& f, double a,
                       double b, int intervals = 4000);

// AR(1) series x_t = phi x_{t-1} + e_t from a seeded std::mt19937_64 stream.
std::vector<double> ar1(double phi, std::size_t n, unsigned long long seed);

// Euler chain of dX = alpha X dt + sigma dW with 2^level substeps per unit
// interval, collapsed to one AR(1) step between observations.
mcis::LinearGaussianSSM euler_ou(double alpha, double sigma, double interval, int level, double obs_var, double m0,
                                 double P0, std::vector<double> y);
// Exact OU transition between observations.
mcis::LinearGaussianSSM exact_ou(double alpha, double sigma, double interval, double obs_var, double m0, double P0,
                                 std::vector<double> y);

// log P(|Y - y*| <= eps) for Y ~ N(theta, sigma^2).
double gaussian_box_loglik(double theta, double sigma, double eps, double y_star);

}  // namespace oracle

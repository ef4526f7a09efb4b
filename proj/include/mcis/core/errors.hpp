#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mcis {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter values (non-positive variances, tolerances, ranges).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A model returned something it must not (NaN potential, negative weight).
class ModelError : public Error {
 public:
  using Error::Error;
};

// Euler step produced a non-finite state.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double state, std::vector<double> theta, int level)
      : Error(what), state_(state), theta_(std::move(theta)), level_(level) {}

  double state() const { return state_; }
  const std::vector<double>& theta() const { return theta_; }
  int level() const { return level_; }

 private:
  double state_;
  std::vector<double> theta_;
  int level_;
};

// Estimator with no usable mass: all-zero weights, zero self-normalization denominator.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Approximate likelihood (plus regularization) vanishes where the exact estimate does not.
class SupportError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

// Sampled level exceeded the configured memory/substep guard.
class ResourceGuardError : public Error {
 public:
  ResourceGuardError(const std::string& what, int level) : Error(what), level_(level) {}
  int level() const { return level_; }

 private:
  int level_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, int line = 0)
      : Error(what), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  // 1-based line in the config file, 0 when unknown (JSON input, missing keys).
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

}  // namespace mcis

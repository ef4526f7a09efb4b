#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace mcis {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(x))) with a single max shift; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> x);

// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_log_pdf(double x, double mean, double variance);

// Correctly rounded floating-point summation (Shewchuk partials, as in
// Python's math.fsum). Two ExactSums over the same multiset of real values
// round to the same double regardless of insertion order.
class ExactSum {
 public:
  void add(double x);
  // Adds a*b exactly (error-free product via fma).
  void add_product(double a, double b);
  double value() const;

 private:
  std::vector<double> partials_;
  double special_ = 0.0;
  bool has_special_ = false;
};

}  // namespace mcis

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mcis {

enum class IactPolicy {
  // tau = 1 + 2 sum_{k>=1} rho_k, Geyer initial positive (monotone) sequence window
  kGeyer,
  // tau = sum_{k>=1} rho_k over the same window (lag-0 term omitted)
  kLiteral,
};

IactPolicy parse_iact_policy(const std::string& name);

struct SeriesStats {
  std::size_t length = 0;
  double mean = 0.0;
  double variance = 0.0;  // 1/n normalization
  std::vector<double> autocorrelations;  // rho_0 .. rho_window
  std::size_t window = 0;
  double iact = 1.0;
  double asvar = 0.0;  // iact * variance
  double standard_error = 0.0;  // sqrt(asvar / n)
};

// Requires length >= 10. A constant series gives iact 1 and asvar 0.
SeriesStats series_stats(std::span<const double> series, IactPolicy policy = IactPolicy::kGeyer);

struct NamedTrace {
  std::string name;
  std::string target;  // declared target; all traces must agree
  std::vector<double> series;  // estimator series f(theta_k) or its IS analogue
  // Optional externally computed asvar (e.g. MCMC-IS delta-method variance)
  // with its own error; when absent the series IACT is used.
  std::optional<double> asvar;
  std::optional<double> asvar_error;
};

struct TraceSummary {
  std::string name;
  double asvar = 0.0;
  double error = 0.0;  // spread of batch estimates / sqrt(batches)
  double mean = 0.0;
};

struct PairComparison {
  std::string first;
  std::string second;
  double difference = 0.0;  // asvar(first) - asvar(second)
  double error = 0.0;       // sqrt(err1^2 + err2^2)
  bool ordered = false;     // asvar(first) <= asvar(second) + 2 error
};

struct BoundCheck {
  std::string name;       // trace whose asvar is bounded
  std::string reference;  // trace providing the bound
  double sup_weight = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct BoundSpec {
  std::string name;
  std::string reference;
  // asvar(name) <= factor * (asvar(reference) + offset), with factor and
  // offset derived by the caller from sup of the likelihood ratio.
  double sup_weight = 1.0;
  double factor = 1.0;
  double offset = 0.0;
};

struct ComparisonReport {
  std::vector<TraceSummary> traces;
  std::vector<PairComparison> pairs;
  std::vector<BoundCheck> bounds;
};

// Per-trace asvar with batch-spread errors, all ordered pairs, optional bound
// checks (allowing 2 combined errors). Throws ConfigError if targets differ.
ComparisonReport compare_chains(const std::vector<NamedTrace>& traces, const std::vector<BoundSpec>& bounds = {},
                                int batches = 10, IactPolicy policy = IactPolicy::kGeyer);

nlohmann::json to_json(const ComparisonReport& report);
std::string format_table(const ComparisonReport& report);

}  // namespace mcis

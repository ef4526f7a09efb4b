#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mcis/core/rng.hpp"
#include "mcis/diagnostics/series.hpp"
#include "mcis/mcmc/prior.hpp"
#include "mcis/mcmc/proposal.hpp"
#include "mcis/model/abc_model.hpp"

namespace mcis {

using ParameterFunction = std::function<double(const ParameterPoint&)>;

struct AbcTrace {
  double eps0 = 0.0;
  std::vector<ParameterPoint> theta;  // Theta_1 .. Theta_n
  std::vector<double> distance;       // T_k = d(Y_k, y*)
  std::vector<bool> accepted;
  std::vector<double> alpha;          // realized acceptance probabilities
  long acceptances = 0;
  ParameterPoint initial_theta;
  double initial_distance = 0.0;

  std::size_t size() const { return theta.size(); }
};

struct AbcChainStart {
  std::optional<ParameterPoint> theta;
  // distance of the initial pseudo-observation; simulated if absent
  std::optional<double> distance;
  int max_init_attempts = 100;
};

// ABC-MCMC at fixed tolerance eps0 for n iterations.
AbcTrace run_abc_mcmc(const AbcModel& model, double eps0, const Prior& prior, const ProposalState& prop, long n,
                      const RngStream& rng, const AbcChainStart& start = {});

struct ToleranceAdaptConfig {
  long n_b = 1000;
  double alpha_star = 0.1;
  bool adapt_covariance = true;
  std::optional<double> eps_init;  // default d(Y_0, y*)
  AbcChainStart start;
};

struct ToleranceAdaptResult {
  ParameterPoint theta;
  double eps = 0.0;
  double distance = 0.0;  // d(Y_{n_b}, y*)
  std::vector<double> eps_path;  // eps_0 .. eps_{n_b}
  std::vector<double> alpha;     // realized acceptance probability per iteration
  long acceptances = 0;
  ProposalState proposal;
};

// Tolerance adaptation: log eps <- log eps + gamma (alpha* - alpha), with the
// k-th update (k = 1, 2, ...) using gamma = k^{-2/3}. Covariance adaptation
// runs alongside when enabled; both freeze at n_b.
ToleranceAdaptResult run_tolerance_adaptation(const AbcModel& model, const Prior& prior, ProposalState prop,
                                              const ToleranceAdaptConfig& config, const RngStream& rng);

// Indicator-weighted average over T_k <= eps. Throws DegenerateError when the
// selection is empty (reports the smallest T_k).
double post_correct(const AbcTrace& trace, double eps, const ParameterFunction& f);

struct CurvePoint {
  double eps = 0.0;
  double estimate = 0.0;
  std::size_t count = 0;
  double variance_s = 0.0;  // S_{eps0,eps}(f)
};

// Estimates for every eps in `grid` (any order) or, if the grid is empty, one
// point per distinct T_k <= eps0. One sort, prefix sums.
std::vector<CurvePoint> post_correct_curve(const AbcTrace& trace, const ParameterFunction& f,
                                           const std::vector<double>& grid = {});

struct AbcCiReport {
  double eps = 0.0;
  double estimate = 0.0;
  double iact = 1.0;
  double variance_s = 0.0;
  double beta = 1.96;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// E +- beta sqrt(tau-hat S), tau-hat from the f(Theta_k) series of the whole chain.
AbcCiReport abc_confidence_interval(const AbcTrace& trace, double eps, const ParameterFunction& f, double beta = 1.96,
                                    IactPolicy policy = IactPolicy::kGeyer);

struct AdaptiveAbcResult {
  ToleranceAdaptResult adaptation;
  AbcTrace trace;
};

// Tolerance adaptation for n_b iterations, then ABC-MCMC at the adapted
// tolerance for n iterations from the adapted state.
AdaptiveAbcResult run_adaptive_abc(const AbcModel& model, const Prior& prior, ProposalState prop,
                                   const ToleranceAdaptConfig& config, long n, const RngStream& rng);

void write_abc_trace_jsonl(std::ostream& os, const AbcTrace& trace);
// epsilon,estimate,ci_lo,ci_hi
void write_curve_csv(std::ostream& os, const AbcTrace& trace, const std::vector<CurvePoint>& curve,
                     const ParameterFunction& f, double beta, IactPolicy policy = IactPolicy::kGeyer);

}  // namespace mcis

#include "mcis/cli/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "mcis/abc/abc.hpp"
#include "mcis/core/errors.hpp"
#include "mcis/core/parallel.hpp"
#include "mcis/diagnostics/series.hpp"
#include "mcis/is/is_correction.hpp"
#include "mcis/mcmc/chain.hpp"
#include "mcis/mcmc/estimators.hpp"
#include "mcis/model/abc_model.hpp"
#include "mcis/model/euler.hpp"
#include "mcis/model/lgssm.hpp"
#include "mcis/multilevel/mlmc.hpp"
#include "mcis/smc/particle_filter.hpp"
#include "mcis/smc/ratio.hpp"

#ifndef MCIS_VERSION
#define MCIS_VERSION "0.0.0"
#endif

namespace mcis::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

ParameterPoint to_point(const std::vector<double>& v) {
  ParameterPoint p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

std::unique_ptr<Prior> make_prior(const ParameterConfig& p) {
  if (p.prior == "gaussian") return std::make_unique<GaussianPrior>(to_point(p.mean), to_point(p.sd));
  return std::make_unique<UniformPrior>(to_point(p.lower), to_point(p.upper));
}

ChainConfig chain_config(const ExperimentConfig& c) {
  ChainConfig ch;
  ch.iterations = c.sampler.iterations;
  ch.burn_in = c.sampler.burn_in;
  ch.adapt = c.sampler.adapt;
  if (!c.parameter.initial.empty()) ch.initial = to_point(c.parameter.initial);
  return ch;
}

ProposalState proposal(const ExperimentConfig& c) {
  return ProposalState::isotropic(static_cast<int>(c.parameter.names.size()), c.sampler.proposal_sd);
}

// Test functions: every parameter, then the final latent state.
struct Functions {
  std::vector<std::string> names;
  std::vector<ThetaPathFunction> path;
};

Functions ssm_functions(const ExperimentConfig& c) {
  Functions f;
  for (std::size_t i = 0; i < c.parameter.names.size(); ++i) {
    f.names.push_back(c.parameter.names[i]);
    f.path.push_back([i](const ParameterPoint& t, std::span<const double>) { return t[static_cast<Eigen::Index>(i)]; });
  }
  f.names.push_back("x_final");
  f.path.push_back([](const ParameterPoint&, std::span<const double> x) { return x.back(); });
  return f;
}

EulerDiffusionModel euler_model(const ModelConfig& m, const ParameterPoint& theta, int level) {
  auto d = to_diffusion(m);
  d.theta.assign(theta.data(), theta.data() + theta.size());
  return EulerDiffusionModel(std::make_shared<const DiffusionSSM>(std::move(d)), level);
}

// Particle filter likelihood estimator on the configured family.
LikelihoodEstimator pf_estimator(const ExperimentConfig& c, std::size_t n, int level, double r_scale,
                                 const Functions& fs) {
  const ModelConfig base = c.model;
  const auto names = c.parameter.names;
  if (base.family == Family::kLgssm) {
    return make_pf_estimator(
        [base, names, r_scale](const ParameterPoint& t) {
          auto l = to_lgssm(with_parameters(base, names, t));
          l.R *= r_scale;
          return LgssmModel(l);
        },
        n, c.sampler.scheme, fs.path);
  }
  return make_pf_estimator(
      [base, names, level](const ParameterPoint& t) { return euler_model(with_parameters(base, names, t), t, level); },
      n, c.sampler.scheme, fs.path);
}

LikelihoodEstimator exact_estimator(const ExperimentConfig& c, const Functions& fs) {
  return pf_estimator(c, c.sampler.particles, c.model.level, 1.0, fs);
}

LikelihoodEstimator approx_estimator(const ExperimentConfig& c, const Functions& fs) {
  if (c.approx.kind == "kalman") {
    const ModelConfig base = c.model;
    const auto names = c.parameter.names;
    const double r_scale = c.approx.r_scale;
    const std::size_t d = names.size();
    auto model = [base, names, r_scale](const ParameterPoint& t) {
      auto l = to_lgssm(with_parameters(base, names, t));
      l.R *= r_scale;
      return l;
    };
    return make_deterministic_estimator([model](const ParameterPoint& t) { return kalman_loglik(model(t)); },
                                        [model, d](const ParameterPoint& t) {
                                          std::vector<double> v(t.data(), t.data() + d);
                                          v.push_back(kalman_smoother_means(model(t)).back());
                                          return v;
                                        });
  }
  const double r_scale = c.model.family == Family::kLgssm ? c.approx.r_scale : 1.0;
  return pf_estimator(c, c.approx.particles, c.approx.level, r_scale, fs);
}

json series_json(const std::string& name, const std::vector<double>& series, IactPolicy policy) {
  json j;
  j["name"] = name;
  if (series.size() < 10) {
    double s = 0.0;
    for (double v : series) s += v;
    j["value"] = series.empty() ? json(nullptr) : json(s / static_cast<double>(series.size()));
    return j;
  }
  const auto st = series_stats(series, policy);
  j["value"] = st.mean;
  j["iact"] = st.iact;
  j["asvar"] = st.asvar;
  j["standard_error"] = st.standard_error;
  return j;
}

json is_estimate_json(const std::string& name, const IsEstimate& e) {
  json j;
  j["name"] = name;
  j["value"] = e.value;
  j["asvar_total"] = e.total;
  j["standard_error"] = e.standard_error;
  j["ess"] = e.ess;
  j["decomposed"] = e.decomposed;
  if (e.decomposed) {
    j["sigma2_1"] = e.sigma2_1;
    j["sigma2_2"] = e.sigma2_2;
  }
  return j;
}

class Output {
 public:
  Output(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write '" + (dir_ / name).string() + "'", "experiment.output");
    fn(os);
    if (!os) throw Error("write failed for '" + (dir_ / name).string() + "'");
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  const ExperimentConfig& config;
  int workers;
  RngStream root;
  Output& out;
  json& summary;
  json& timing;
  std::string report;
};

double ratio_se_or_null(const RatioEstimate& r) { return r.standard_error; }

void run_pf(Context& ctx) {
  const auto& c = ctx.config;
  const int runs = c.sampler.runs;
  const int n = static_cast<int>(c.model.observations.size()) - 1;
  std::vector<PathFunction> fs;
  for (int p = 0; p <= n; ++p) fs.push_back([p](std::span<const double> x) { return x[p]; });
  std::vector<SmootherEstimate> est(runs);
  std::vector<json> clouds(runs);
  double cost = 0.0;
  FilterOptions opt;
  opt.scheme = c.sampler.scheme;
  const ParameterPoint none(0);
  if (c.model.family == Family::kLgssm) {
    const LgssmModel model(to_lgssm(c.model));
    parallel_for(runs, ctx.workers, [&](std::size_t r) {
      RngStream s = ctx.root.substream(StreamTag::kReplicate, r);
      const auto res = run_particle_filter(model, c.sampler.particles, s, fs, opt);
      est[r] = res.estimate;
      clouds[r] = cloud_summary(res.cloud);
    });
    cost = static_cast<double>(runs) * static_cast<double>(c.sampler.particles) * (n + 1);
    const auto lg = to_lgssm(c.model);
    ctx.summary["oracle"] = {{"kalman_loglik", kalman_loglik(lg)}, {"kalman_smoother_means", kalman_smoother_means(lg)}};
  } else {
    const auto model = euler_model(c.model, none, c.model.level);
    parallel_for(runs, ctx.workers, [&](std::size_t r) {
      RngStream s = ctx.root.substream(StreamTag::kReplicate, r);
      const auto res = run_particle_filter(model, c.sampler.particles, s, fs, opt);
      est[r] = res.estimate;
      clouds[r] = cloud_summary(res.cloud);
    });
    cost = static_cast<double>(runs) * model.cost_units(c.sampler.particles);
    if (c.model.family == Family::kOu) {
      const auto d = to_diffusion(c.model);
      const auto lg = ou_euler_lgssm(d, c.model.level);
      ctx.summary["oracle"] = {{"euler_kalman_loglik", kalman_loglik(lg)},
                               {"euler_kalman_smoother_means", kalman_smoother_means(lg)},
                               {"exact_kalman_loglik", kalman_loglik(ou_exact_lgssm(d))}};
    }
  }
  ctx.out.write("pf_runs.jsonl", [&](std::ostream& os) {
    for (int r = 0; r < runs; ++r) {
      json j;
      j["run"] = r;
      j["loglik_hat"] = finite(est[r].log_normalizer);
      j["final_ess"] = clouds[r]["final_ess"];
      j["complete"] = clouds[r]["complete"];
      os << j.dump() << '\n';
    }
  });
  std::vector<double> logs;
  for (const auto& e : est) logs.push_back(e.log_normalizer);
  ctx.summary["loglik_hat"] = finite(est[0].log_normalizer);
  ctx.summary["log_mean_likelihood"] = finite(log_sum_exp(logs) - std::log(static_cast<double>(runs)));
  json means = json::array();
  for (int p = 0; p <= n; ++p) {
    const auto r = ratio_estimate(est, p);
    means.push_back({{"p", p}, {"value", finite(r.value)}, {"standard_error", finite(ratio_se_or_null(r))}});
  }
  ctx.summary["smoother_means"] = means;
  ctx.summary["runs"] = runs;
  ctx.summary["cost_units"] = cost;
}

void pmmh_summary(Context& ctx, const PmmhResult& res, const Functions& fs, const std::string& trace_file) {
  ctx.out.write(trace_file, [&](std::ostream& os) { write_trace_jsonl(os, res.trace); });
  json est = json::array();
  for (std::size_t j = 0; j < fs.names.size(); ++j) est.push_back(series_json(fs.names[j], res.series[j], ctx.config.sampler.iact));
  ctx.summary["estimates"] = est;
  ctx.summary["acceptance_rate"] = res.trace.acceptance_rate(ctx.config.sampler.iterations);
  ctx.summary["cost_units"] = res.trace.cost;
}

void run_pmmh_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto fs = ssm_functions(c);
  const auto prior = make_prior(c.parameter);
  const auto t0 = Clock::now();
  const auto res = run_pmmh(*prior, proposal(c), exact_estimator(c, fs), chain_config(c), ctx.root);
  ctx.timing["chain_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  pmmh_summary(ctx, res, fs, "trace.jsonl");
}

void run_da_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto fs = ssm_functions(c);
  const auto prior = make_prior(c.parameter);
  DaConfig da;
  da.eps = c.sampler.eps_reg;
  da.audit = c.sampler.audit;
  const auto t0 = Clock::now();
  const auto res = run_delayed_acceptance(*prior, proposal(c), approx_estimator(c, fs), exact_estimator(c, fs), da,
                                          chain_config(c), ctx.root);
  ctx.timing["chain_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  pmmh_summary(ctx, res.chain, fs, "trace.jsonl");
  ctx.summary["stage_one_accepted"] = res.stage_one_accepted;
  ctx.summary["inequality_checks"] = res.inequality_checks;
  ctx.summary["inequality_violations"] = res.inequality_violations;
}

struct IsRun {
  McmcIsResult result;
};

McmcIsResult mcmc_is_core(Context& ctx, const Functions& fs, const RngStream& rng) {
  const auto& c = ctx.config;
  const auto prior = make_prior(c.parameter);
  IsConfig is;
  is.replicates = c.sampler.replicates;
  is.workers = ctx.workers;
  is.thin = c.sampler.thin;
  return run_mcmc_is(*prior, proposal(c), approx_estimator(c, fs),
                     pf_weight_function(exact_estimator(c, fs), c.sampler.eps_reg), c.sampler.eps_reg,
                     fs.names.size(), chain_config(c), is, rng);
}

void is_outputs(Context& ctx, const JumpChain& jump, const std::vector<IsWeightedSample>& samples,
                const std::vector<IsEstimate>& estimates, const Functions& fs) {
  ctx.out.write("jump_chain.jsonl", [&](std::ostream& os) { write_jump_chain_jsonl(os, jump); });
  ctx.out.write("is_samples.jsonl", [&](std::ostream& os) { write_is_samples_jsonl(os, samples); });
  json est = json::array();
  for (std::size_t j = 0; j < estimates.size(); ++j) est.push_back(is_estimate_json(fs.names[j], estimates[j]));
  ctx.summary["estimates"] = est;
  ctx.summary["jump_states"] = jump.size();
}

void run_mcmc_is_alg(Context& ctx) {
  const auto fs = ssm_functions(ctx.config);
  const auto t0 = Clock::now();
  const auto res = mcmc_is_core(ctx, fs, ctx.root);
  ctx.timing["total_seconds_mcmc_is"] = std::chrono::duration<double>(Clock::now() - t0).count();
  ctx.out.write("trace.jsonl", [&](std::ostream& os) { write_trace_jsonl(os, res.phase_one.trace); });
  is_outputs(ctx, res.phase_one.jump, res.samples, res.estimates, fs);
  ctx.summary["acceptance_rate"] = res.phase_one.trace.acceptance_rate(ctx.config.sampler.iterations);
  ctx.summary["phase_one_cost_units"] = res.phase_one.trace.cost;
  ctx.summary["phase_two_cost_units"] = res.phase_two_cost;
  ctx.summary["cost_units"] = res.phase_one.trace.cost + res.phase_two_cost;
}

void run_mlmc_is_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto fs = ssm_functions(c);
  const auto prior = make_prior(c.parameter);
  MlmcIsConfig cfg;
  cfg.schedule = build_schedule(c.sampler.rho, c.sampler.particles, c.sampler.schedule, c.sampler.eta);
  cfg.eps = c.sampler.eps_reg;
  cfg.chain = chain_config(c);
  cfg.is.replicates = c.sampler.replicates;
  cfg.is.workers = ctx.workers;
  cfg.is.thin = c.sampler.thin;
  cfg.level_zero_scheme = c.sampler.scheme;
  cfg.max_cost_units = c.sampler.max_cost_units;
  const ModelConfig base = c.model;
  const auto names = c.parameter.names;
  auto factory = [base, names](const ParameterPoint& t) {
    auto d = to_diffusion(with_parameters(base, names, t));
    d.theta.assign(t.data(), t.data() + t.size());
    return EulerModelFamily(std::move(d));
  };
  const auto t0 = Clock::now();
  const auto res = run_mlmc_is(*prior, proposal(c), factory, fs.path, cfg, ctx.root);
  ctx.timing["total_seconds_mlmc_is"] = std::chrono::duration<double>(Clock::now() - t0).count();
  ctx.out.write("trace.jsonl", [&](std::ostream& os) { write_trace_jsonl(os, res.phase_one.trace); });
  is_outputs(ctx, res.phase_one.jump, res.samples, res.estimates, fs);

  // per-level spread of the single-term weights
  std::map<int, std::vector<double>> by_level;
  for (const auto& s : res.samples)
    for (std::size_t r = 0; r < s.levels.size(); ++r) by_level[s.levels[r]].push_back(s.rep_xi_one[r]);
  ctx.out.write("variance_by_level.csv", [&](std::ostream& os) {
    os << "level,count,mean_xi_one,var_xi_one\n";
    os.precision(17);
    for (const auto& [l, v] : by_level) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      os << l << ',' << v.size() << ',' << m << ',';
      if (v.size() > 1) os << ss / static_cast<double>(v.size() - 1);
      os << '\n';
    }
  });
  ctx.out.write("ledger.csv", [&](std::ostream& os) {
    os << "k,cost,cumulative\n";
    os.precision(17);
    for (std::size_t k = 0; k < res.ledger.size(); ++k)
      os << k + 1 << ',' << res.ledger.costs()[k] << ',' << res.ledger.cumulative(k + 1) << '\n';
  });
  ctx.summary["schedule"] = to_json(cfg.schedule);
  ctx.summary["ledger"] = to_json(res.ledger);
  ctx.summary["level_counts"] = res.level_counts;
  json ires = json::array();
  for (std::size_t j = 0; j < res.estimates.size(); ++j)
    ires.push_back({{"name", fs.names[j]}, {"ire", ire(res.ledger, res.estimates[j].total)}});
  ctx.summary["ire"] = ires;
  ctx.summary["acceptance_rate"] = res.phase_one.trace.acceptance_rate(c.sampler.iterations);
  ctx.summary["cost_units"] = res.ledger.total();
}

std::unique_ptr<AbcModel> abc_model(const ModelConfig& m) {
  if (m.family == Family::kGaussianAbc) return std::make_unique<GaussianAbcModel>(m.abc_sigma, m.y_star);
  return std::make_unique<LotkaVolterraAbcModel>(m.init, m.times, m.observations, m.max_events);
}

void abc_outputs(Context& ctx, const AbcTrace& trace) {
  const auto& c = ctx.config;
  ctx.out.write("abc_trace.jsonl", [&](std::ostream& os) { write_abc_trace_jsonl(os, trace); });
  json est = json::array();
  std::vector<double> tols{trace.eps0};
  for (double t : c.sampler.tolerances)
    if (t != trace.eps0) tols.push_back(t);
  for (std::size_t i = 0; i < c.parameter.names.size(); ++i) {
    const ParameterFunction f = [i](const ParameterPoint& t) { return t[static_cast<Eigen::Index>(i)]; };
    const auto name = c.parameter.names[i];
    for (double eps : tols) {
      if (eps > trace.eps0) continue;
      const auto ci = abc_confidence_interval(trace, eps, f, c.sampler.beta, c.sampler.iact);
      est.push_back({{"name", name},
                     {"epsilon", eps},
                     {"value", ci.estimate},
                     {"iact", ci.iact},
                     {"variance_s", ci.variance_s},
                     {"ci_lo", ci.lower},
                     {"ci_hi", ci.upper},
                     {"count", ci.count}});
    }
    const auto curve = post_correct_curve(trace, f, c.sampler.tolerances);
    ctx.out.write("curve_" + name + ".csv",
                  [&](std::ostream& os) { write_curve_csv(os, trace, curve, f, c.sampler.beta, c.sampler.iact); });
  }
  ctx.summary["estimates"] = est;
  ctx.summary["eps0"] = trace.eps0;
  ctx.summary["acceptances"] = trace.acceptances;
  ctx.summary["acceptance_rate"] = static_cast<double>(trace.acceptances) / static_cast<double>(trace.size());
}

void run_abc_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto model = abc_model(c.model);
  const auto prior = make_prior(c.parameter);
  AbcChainStart start;
  if (!c.parameter.initial.empty()) start.theta = to_point(c.parameter.initial);
  const auto t0 = Clock::now();
  const auto trace = run_abc_mcmc(*model, *c.sampler.eps0, *prior, proposal(c), c.sampler.iterations, ctx.root, start);
  ctx.timing["chain_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  abc_outputs(ctx, trace);
  ctx.summary["cost_units"] = static_cast<double>(c.sampler.iterations) + 1.0;
}

void run_abc_adaptive_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto model = abc_model(c.model);
  const auto prior = make_prior(c.parameter);
  ToleranceAdaptConfig ta;
  ta.n_b = c.sampler.burn_in;
  ta.alpha_star = c.sampler.alpha_star;
  ta.adapt_covariance = c.sampler.adapt;
  ta.eps_init = c.sampler.eps0;
  if (!c.parameter.initial.empty()) ta.start.theta = to_point(c.parameter.initial);
  const auto t0 = Clock::now();
  const auto res = run_adaptive_abc(*model, *prior, proposal(c), ta, c.sampler.iterations, ctx.root);
  ctx.timing["chain_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
  ctx.out.write("tolerance_path.csv", [&](std::ostream& os) {
    os << "k,epsilon,alpha\n";
    os.precision(17);
    for (std::size_t k = 0; k < res.adaptation.eps_path.size(); ++k) {
      os << k << ',' << res.adaptation.eps_path[k] << ',';
      if (k > 0) os << res.adaptation.alpha[k - 1];
      os << '\n';
    }
  });
  abc_outputs(ctx, res.trace);
  const std::size_t tail = std::min<std::size_t>(res.adaptation.alpha.size(), 10000);
  double s = 0.0;
  for (std::size_t k = res.adaptation.alpha.size() - tail; k < res.adaptation.alpha.size(); ++k)
    s += res.adaptation.alpha[k];
  ctx.summary["adaptation"] = {{"eps", res.adaptation.eps},
                               {"iterations", c.sampler.burn_in},
                               {"mean_alpha_tail", tail ? s / static_cast<double>(tail) : 0.0},
                               {"tail_length", tail}};
  ctx.summary["cost_units"] = static_cast<double>(c.sampler.burn_in + c.sampler.iterations) + 1.0;
}

// Per-iteration IS series f(j_k) xi(j_k) / mean xi, whose average is the IS estimate.
std::vector<double> is_series(const std::vector<IsWeightedSample>& samples, std::size_t f) {
  ExactSum num, den;
  for (const auto& s : samples) den.add_product(static_cast<double>(s.multiplicity), s.xi_one);
  long m = 0;
  for (const auto& s : samples) m += s.multiplicity;
  const double mean_w = den.value() / static_cast<double>(m);
  std::vector<double> out;
  for (const auto& s : samples)
    for (long r = 0; r < s.multiplicity; ++r) out.push_back(s.xi_f(f) / mean_w);
  return out;
}

void run_compare_alg(Context& ctx) {
  const auto& c = ctx.config;
  const auto fs = ssm_functions(c);
  const auto prior = make_prior(c.parameter);
  const auto exact = exact_estimator(c, fs);
  const auto approx = approx_estimator(c, fs);
  const auto chain = chain_config(c);
  const auto t0 = Clock::now();
  const auto pm = run_pmmh(*prior, proposal(c), exact, chain, ctx.root.substream(StreamTag::kChain, 0));
  DaConfig da;
  da.eps = c.sampler.eps_reg;
  da.audit = c.sampler.audit;
  const auto dr = run_delayed_acceptance(*prior, proposal(c), approx, exact, da, chain,
                                         ctx.root.substream(StreamTag::kChain, 1));
  const auto is = mcmc_is_core(ctx, fs, ctx.root.substream(StreamTag::kChain, 2));
  ctx.timing["total_seconds_compare"] = std::chrono::duration<double>(Clock::now() - t0).count();

  ctx.out.write("trace_pmmh.jsonl", [&](std::ostream& os) { write_trace_jsonl(os, pm.trace); });
  ctx.out.write("trace_da.jsonl", [&](std::ostream& os) { write_trace_jsonl(os, dr.chain.trace); });
  ctx.out.write("jump_chain_mcmc_is.jsonl", [&](std::ostream& os) { write_jump_chain_jsonl(os, is.phase_one.jump); });
  ctx.out.write("is_samples.jsonl", [&](std::ostream& os) { write_is_samples_jsonl(os, is.samples); });

  json reports = json::array();
  std::ostringstream table;
  for (std::size_t j = 0; j < fs.names.size(); ++j) {
    // batch spread of the IS asvar over contiguous blocks of jump states
    const int batches = 10;
    std::vector<double> totals;
    const std::size_t len = is.samples.size() / batches;
    if (len >= 10) {
      for (int b = 0; b < batches; ++b) {
        std::vector<IsWeightedSample> part(is.samples.begin() + b * len, is.samples.begin() + (b + 1) * len);
        long m = 0;
        for (const auto& s : part) m += s.multiplicity;
        if (m < 10) continue;
        try {
          totals.push_back(estimate_asvar_decomposition(part, j, c.sampler.iact).total);
        } catch (const Error&) {
        }
      }
    }
    double err = 0.0;
    if (totals.size() > 1) {
      double mu = 0.0;
      for (double v : totals) mu += v;
      mu /= static_cast<double>(totals.size());
      double ss = 0.0;
      for (double v : totals) ss += (v - mu) * (v - mu);
      err = std::sqrt(ss / static_cast<double>(totals.size() - 1) / static_cast<double>(totals.size()));
    }
    NamedTrace is_trace{"mcmc-is", fs.names[j], is_series(is.samples, j), is.estimates[j].total, err};
    const auto rep = compare_chains(
        {{"pmmh", fs.names[j], pm.series[j], {}, {}}, {"da", fs.names[j], dr.chain.series[j], {}, {}}, is_trace}, {}, 10,
        c.sampler.iact);
    json r = to_json(rep);
    r["function"] = fs.names[j];
    reports.push_back(r);
    table << "function " << fs.names[j] << "\n" << format_table(rep) << "\n";
  }
  ctx.out.write("comparison.json", [&](std::ostream& os) { os << reports.dump(2) << '\n'; });
  ctx.summary["comparison"] = reports;
  ctx.summary["acceptance_rate"] = {{"pmmh", pm.trace.acceptance_rate(c.sampler.iterations)},
                                    {"da", dr.chain.trace.acceptance_rate(c.sampler.iterations)},
                                    {"mcmc-is", is.phase_one.trace.acceptance_rate(c.sampler.iterations)}};
  ctx.summary["inequality_violations"] = dr.inequality_violations;
  ctx.summary["cost_units"] = pm.trace.cost + dr.chain.trace.cost + is.phase_one.trace.cost + is.phase_two_cost;
  ctx.report = table.str();
}

}  // namespace

int resolve_workers(const ExperimentConfig& config, const RunOptions& options) {
  if (options.workers) return std::max(*options.workers, 1);
  if (const char* env = std::getenv("MCIS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
    throw ConfigError("MCIS_WORKERS must be a positive integer, got '" + std::string(env) + "'", "MCIS_WORKERS");
  }
  return config.workers;
}

RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = Clock::now();
  RunOutcome outcome;
  outcome.directory = options.output ? *options.output : config.output;
  Output out(outcome.directory);
  json summary;
  json timing = json::object();
  summary["algorithm"] = to_string(config.algorithm);
  summary["family"] = to_string(config.model.family);
  summary["version"] = MCIS_VERSION;
  summary["seed"] = config.seed;
  summary["config_hash"] = hex(config.hash);
  summary["timing_file"] = "timing.json";
  if (!config.parameter.names.empty()) summary["parameters"] = config.parameter.names;

  Context ctx{config, resolve_workers(config, options), RngStream(config.seed), out, summary, timing, {}};
  switch (config.algorithm) {
    case Algorithm::kPf: run_pf(ctx); break;
    case Algorithm::kPmmh: run_pmmh_alg(ctx); break;
    case Algorithm::kDa: run_da_alg(ctx); break;
    case Algorithm::kMcmcIs: run_mcmc_is_alg(ctx); break;
    case Algorithm::kMlmcIs: run_mlmc_is_alg(ctx); break;
    case Algorithm::kAbcMcmc: run_abc_alg(ctx); break;
    case Algorithm::kAbcAdaptive: run_abc_adaptive_alg(ctx); break;
    case Algorithm::kCompare: run_compare_alg(ctx); break;
  }
  summary["outputs"] = out.files();
  out.write("summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  timing["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  timing["workers"] = ctx.workers;
  out.write("timing.json", [&](std::ostream& os) { os << timing.dump(2) << '\n'; });
  outcome.summary = std::move(summary);
  outcome.report = std::move(ctx.report);
  return outcome;
}

int run_command(const std::string& command, const std::filesystem::path& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err) {
  try {
    if (command != "run" && command != "validate" && command != "compare")
      throw ConfigError("unknown command '" + command + "' (expected run, validate or compare)", "command");
    const auto config = load_config(config_path);
    if (command == "validate") {
      resolve_workers(config, options);
      out << describe(config);
      return kExitOk;
    }
    if (command == "compare" && config.algorithm != Algorithm::kCompare)
      throw ConfigError("the compare command needs experiment.algorithm = compare", "experiment.algorithm");
    const auto outcome = run_experiment(config, options);
    if (!outcome.report.empty()) out << outcome.report;
    out << "wrote " << (outcome.directory / "summary.json").string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error";
    if (e.line() > 0) err << " at " << config_path.string() << ":" << e.line();
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceGuardError& e) {
    err << "resource guard: " << e.what() << '\n';
    return kExitGuard;
  } catch (const DegenerateError& e) {
    err << "degenerate estimator: " << e.what() << " (try a larger eps_reg or more iterations)\n";
    return kExitDegenerate;
  } catch (const SupportError& e) {
    err << "degenerate estimator (support): " << e.what() << " (set sampler.eps_reg > 0)\n";
    return kExitDegenerate;
  } catch (const InitializationError& e) {
    err << "degenerate estimator (initialization): " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace mcis::cli

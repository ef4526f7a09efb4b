#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mcis/core/errors.hpp"
#include "mcis/diagnostics/series.hpp"
#include "mcis/mcmc/chain.hpp"
#include "mcis/mcmc/estimators.hpp"
#include "mcis/mcmc/prior.hpp"
#include "mcis/mcmc/proposal.hpp"
#include "mcis/model/lgssm.hpp"
#include "oracles.hpp"

using namespace mcis;

namespace {

ParameterPoint point(double v) {
  ParameterPoint t(1);
  t << v;
  return t;
}

LinearGaussianSSM lgssm_data() {
  LinearGaussianSSM m;
  m.A = 0.6;
  m.Q = 0.25;
  m.R = 1.0;
  m.P0 = 1.0;
  RngStream r(2024);
  m.y = simulate_lgssm(m, 19, r);
  return m;
}

LinearGaussianSSM with_a(LinearGaussianSSM m, double a) {
  m.A = a;
  return m;
}

double quadrature_posterior_mean(const LinearGaussianSSM& data) {
  return oracle::quadrature_mean([&](double a) { return kalman_loglik(with_a(data, a)); },
                                 [](double a) { return a; }, 0.0, 1.0);
}

// Mean of theta over post burn-in records with a Geyer standard error.
std::pair<double, double> theta_mean(const ChainTrace& t) {
  std::vector<double> s;
  for (const auto& r : t.records) s.push_back(r.theta[0]);
  const auto st = series_stats(s, IactPolicy::kGeyer);
  return {st.mean, std::sqrt(st.asvar / s.size())};
}

}  // namespace

TEST(Proposal, TinyScaleStaysPut) {
  const auto prop = ProposalState::isotropic(3, 1e-12);
  ParameterPoint x(3);
  x << 1.0, -2.0, 0.5;
  RngStream r(1);
  const auto y = propose(x, prop, r);
  EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Proposal, SymmetricDensity) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.3, 0.3, 0.5;
  const ProposalState prop(c);
  RngStream r(4);
  for (int i = 0; i < 50; ++i) {
    ParameterPoint a(2), b(2);
    a << r.normal(), r.normal();
    b << r.normal(), r.normal();
    EXPECT_NEAR(proposal_log_density(a, b, prop) - proposal_log_density(b, a, prop), 0.0, 1e-14);
  }
}

TEST(Proposal, SeededDeterminism) {
  const auto prop = ProposalState::isotropic(2, 0.7);
  ParameterPoint x = ParameterPoint::Zero(2);
  RngStream a(9), b(9);
  EXPECT_EQ(propose(x, prop, a), propose(x, prop, b));
}

TEST(Adapt, ConstantSamplesShrinkToJitter) {
  auto prop = ProposalState::isotropic(2, 1.0);
  ParameterPoint x(2);
  x << 0.3, 0.3;
  for (long k = 1; k <= 20000; ++k) prop = adapt_covariance(prop, x, k);
  EXPECT_LT(prop.covariance().cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GE(prop.covariance()(0, 0), ProposalState::kJitter * 0.999);
}

TEST(Adapt, IidNormalStreamGivesScaledIdentity) {
  const int d = 3;
  auto prop = ProposalState::isotropic(d, 1.0);
  RngStream r(77);
  for (long k = 1; k <= 100000; ++k) {
    ParameterPoint x(d);
    for (int i = 0; i < d; ++i) x[i] = r.normal();
    prop = adapt_covariance(prop, x, k);
  }
  const double target = 2.38 * 2.38 / d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double expect = i == j ? target : 0.0;
      EXPECT_NEAR(prop.covariance()(i, j), expect, 0.1 * target) << i << "," << j;
    }
}

TEST(Adapt, FrozenIsIdentity) {
  auto prop = ProposalState::isotropic(2, 0.5);
  prop.freeze();
  ParameterPoint x(2);
  x << 5.0, 6.0;
  const auto out = adapt_covariance(prop, x, 3);
  EXPECT_EQ(out.covariance(), prop.covariance());
  EXPECT_EQ(out.step(), prop.step());
}

TEST(Pmmh, FlatLikelihoodTargetsPrior) {
  const GaussianPrior prior(point(1.5), point(1.0));
  const auto est = make_deterministic_estimator([](const ParameterPoint&) { return 0.0; });
  ChainConfig cfg;
  cfg.iterations = 40000;
  cfg.burn_in = 1000;
  const auto res = run_pmmh(prior, ProposalState::isotropic(1, 2.0), est, cfg, RngStream(5));
  const auto [mean, se] = theta_mean(res.trace);
  EXPECT_NEAR(mean, 1.5, 4 * se);
  EXPECT_EQ(static_cast<long>(res.trace.records.size()), cfg.iterations);
}

TEST(Pmmh, ZeroScaleAcceptsEverything) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto est = make_deterministic_estimator([](const ParameterPoint& t) { return -t[0] * t[0]; });
  ChainConfig cfg;
  cfg.iterations = 500;
  cfg.initial = point(0.4);
  const auto res = run_pmmh(prior, ProposalState(Eigen::MatrixXd::Zero(1, 1)), est, cfg, RngStream(1));
  EXPECT_EQ(res.trace.accepted, cfg.iterations);
  for (const auto& r : res.trace.records) EXPECT_EQ(r.theta[0], 0.4);
}

TEST(Pmmh, InitializationCap) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto est = make_deterministic_estimator([](const ParameterPoint&) { return kNegInf; });
  ChainConfig cfg;
  cfg.iterations = 10;
  cfg.max_init_attempts = 5;
  EXPECT_THROW(run_pmmh(prior, ProposalState::isotropic(1, 1.0), est, cfg, RngStream(1)), InitializationError);
}

TEST(Pmmh, LgssmPosteriorMeanMatchesQuadrature) {
  const auto data = lgssm_data();
  const double truth = quadrature_posterior_mean(data);
  const UniformPrior prior(point(0.0), point(1.0));
  const auto est = make_pf_estimator([&](const ParameterPoint& t) { return LgssmModel(with_a(data, t[0])); }, 32,
                                     ResampleScheme::kSystematic, {});
  ChainConfig cfg;
  cfg.iterations = 20000;
  cfg.burn_in = 2000;
  cfg.initial = point(0.5);
  const auto res = run_pmmh(prior, ProposalState::isotropic(1, 0.2), est, cfg, RngStream(31));
  const auto [mean, se] = theta_mean(res.trace);
  EXPECT_NEAR(mean, truth, 3 * se);
}

TEST(Pmmh, AdaptationFreezesAfterBurnIn) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto est = make_deterministic_estimator([](const ParameterPoint&) { return 0.0; });
  ChainConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 200;
  cfg.adapt = true;
  const auto res = run_pmmh(prior, ProposalState::isotropic(1, 1.0), est, cfg, RngStream(3));
  EXPECT_EQ(res.trace.adaptation_calls, 200);
  EXPECT_EQ(res.trace.adaptation_calls_after_freeze, 0);
  EXPECT_TRUE(res.proposal.frozen());
}

TEST(Pmmh, RejectedIffStateRepeats) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto est = make_deterministic_estimator([](const ParameterPoint& t) { return -2.0 * t[0] * t[0]; });
  ChainConfig cfg;
  cfg.iterations = 2000;
  const auto res = run_pmmh(prior, ProposalState::isotropic(1, 1.5), est, cfg, RngStream(8));
  for (std::size_t k = 1; k < res.trace.records.size(); ++k) {
    const bool same = res.trace.records[k].theta == res.trace.records[k - 1].theta;
    EXPECT_EQ(same, !res.trace.records[k].accepted);
  }
}

TEST(DelayedAcceptance, ExactApproxMakesStageTwoCertain) {
  const auto data = lgssm_data();
  const UniformPrior prior(point(0.0), point(1.0));
  const auto exact = make_deterministic_estimator([&](const ParameterPoint& t) { return kalman_loglik(with_a(data, t[0])); });
  ChainConfig cfg;
  cfg.iterations = 3000;
  cfg.initial = point(0.5);
  const auto res = run_delayed_acceptance(prior, ProposalState::isotropic(1, 0.2), exact, exact, DaConfig{}, cfg,
                                          RngStream(12));
  long stage_two = 0;
  for (const auto& c : res.checks) {
    if (c.stage_one_accepted && !std::isnan(c.log_alpha_two)) {
      EXPECT_NEAR(c.log_alpha_two, 0.0, 1e-12);
      ++stage_two;
    }
  }
  EXPECT_GT(stage_two, 0);
  EXPECT_EQ(res.chain.trace.accepted + res.chain.trace.burn_in_accepted, res.stage_one_accepted);
}

TEST(DelayedAcceptance, InequalityHoldsEveryIteration) {
  const auto data = lgssm_data();
  const UniformPrior prior(point(0.0), point(1.0));
  auto perturbed = data;
  perturbed.R *= 2.0;
  const auto approx =
      make_deterministic_estimator([&](const ParameterPoint& t) { return kalman_loglik(with_a(perturbed, t[0])); });
  const auto exact = make_pf_estimator([&](const ParameterPoint& t) { return LgssmModel(with_a(data, t[0])); }, 16,
                                       ResampleScheme::kSystematic, {});
  ChainConfig cfg;
  cfg.iterations = 2000;
  cfg.initial = point(0.5);
  DaConfig da;
  da.audit = true;
  const auto res = run_delayed_acceptance(prior, ProposalState::isotropic(1, 0.3), approx, exact, da, cfg,
                                          RngStream(13));
  EXPECT_EQ(res.inequality_checks, cfg.iterations);
  EXPECT_EQ(res.inequality_violations, 0);
}

TEST(DelayedAcceptance, InequalityPredicate) {
  EXPECT_TRUE(da_inequality_holds(0.5, -0.3));
  EXPECT_TRUE(da_inequality_holds(-1.0, -2.0));
  EXPECT_TRUE(da_inequality_holds(kNegInf, 3.0));
  RngStream r(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = 4 * r.normal(), b = 4 * r.normal();
    EXPECT_TRUE(da_inequality_holds(a, b));
  }
}

TEST(DelayedAcceptance, AgreesWithPmmh) {
  const auto data = lgssm_data();
  const double truth = quadrature_posterior_mean(data);
  const UniformPrior prior(point(0.0), point(1.0));
  auto perturbed = data;
  perturbed.R *= 2.0;
  const auto approx =
      make_deterministic_estimator([&](const ParameterPoint& t) { return kalman_loglik(with_a(perturbed, t[0])); });
  const auto exact = make_pf_estimator([&](const ParameterPoint& t) { return LgssmModel(with_a(data, t[0])); }, 32,
                                       ResampleScheme::kSystematic, {});
  ChainConfig cfg;
  cfg.iterations = 20000;
  cfg.burn_in = 1000;
  cfg.initial = point(0.5);
  const auto res = run_delayed_acceptance(prior, ProposalState::isotropic(1, 0.2), approx, exact, DaConfig{}, cfg,
                                          RngStream(14));
  const auto [mean, se] = theta_mean(res.chain.trace);
  EXPECT_NEAR(mean, truth, 3 * se);
}

TEST(ApproxChain, AllRejectedGivesSingleState) {
  // support of width 1e-9 around the start: proposals with sd 1 never land inside
  const UniformPrior prior(point(0.5), point(0.5 + 1e-9));
  int calls = 0;
  const auto approx = make_deterministic_estimator([&](const ParameterPoint&) {
    ++calls;
    return 0.0;
  });
  ChainConfig cfg;
  cfg.iterations = 250;
  cfg.initial = point(0.5);
  const auto res =
      run_approx_marginal_chain(prior, ProposalState::isotropic(1, 1.0), approx, 0.0, cfg, RngStream(2));
  ASSERT_EQ(res.jump.size(), 1u);
  EXPECT_EQ(res.jump.holding[0], 250);
  EXPECT_EQ(calls, 1);
}

TEST(ApproxChain, FlatTargetsPrior) {
  const GaussianPrior prior(point(-0.7), point(0.5));
  const auto approx = make_deterministic_estimator([](const ParameterPoint&) { return 0.0; });
  ChainConfig cfg;
  cfg.iterations = 40000;
  cfg.burn_in = 500;
  const auto res = run_approx_marginal_chain(prior, ProposalState::isotropic(1, 1.0), approx, 0.0, cfg, RngStream(6));
  const auto [mean, se] = theta_mean(res.trace);
  EXPECT_NEAR(mean, -0.7, 4 * se);
}

TEST(ApproxChain, JumpChainExpandsToTrace) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto approx = make_deterministic_estimator([](const ParameterPoint& t) { return -t[0] * t[0]; });
  for (int seed = 0; seed < 5; ++seed) {
    ChainConfig cfg;
    cfg.iterations = 3000 + 17 * seed;
    cfg.burn_in = 100;
    const auto res =
        run_approx_marginal_chain(prior, ProposalState::isotropic(1, 1.0), approx, 0.1, cfg, RngStream(40 + seed));
    EXPECT_EQ(res.jump.total(), cfg.iterations);
    const auto idx = res.jump.expand();
    ASSERT_EQ(idx.size(), res.trace.records.size());
    for (std::size_t k = 0; k < idx.size(); ++k) ASSERT_EQ(res.jump.theta[idx[k]], res.trace.records[k].theta);
    for (std::size_t j = 1; j < res.jump.size(); ++j) EXPECT_NE(res.jump.theta[j], res.jump.theta[j - 1]);
    for (long h : res.jump.holding) EXPECT_GE(h, 1);
  }
}

TEST(ApproxChain, Thinning) {
  JumpChain j;
  j.theta = {point(1), point(2), point(3)};
  j.log_approx = {0, 0, 0};
  j.holding = {3, 1, 4};
  const auto t = j.thinned(2);
  // kept iterations 0,2,4,6 -> states 1,1,3,3
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.theta[0][0], 1.0);
  EXPECT_EQ(t.holding[0], 2);
  EXPECT_EQ(t.theta[1][0], 3.0);
  EXPECT_EQ(t.holding[1], 2);
}

TEST(Traces, JsonLines) {
  const GaussianPrior prior(point(0.0), point(1.0));
  const auto approx = make_deterministic_estimator([](const ParameterPoint&) { return 0.0; });
  ChainConfig cfg;
  cfg.iterations = 20;
  const auto res = run_approx_marginal_chain(prior, ProposalState::isotropic(1, 1.0), approx, 0.0, cfg, RngStream(6));
  std::ostringstream a, b;
  write_trace_jsonl(a, res.trace);
  write_jump_chain_jsonl(b, res.jump);
  long lines = 0;
  for (char ch : a.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 20);
  EXPECT_NE(a.str().find("\"loglik_hat\""), std::string::npos);
  EXPECT_NE(b.str().find("\"holding_time\""), std::string::npos);
}

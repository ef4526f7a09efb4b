#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"
#include "mcis/diagnostics/series.hpp"
#include "mcis/is/is_correction.hpp"
#include "mcis/mcmc/chain.hpp"
#include "mcis/mcmc/estimators.hpp"
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

std::vector<double> thetas(const ChainTrace& t) {
  std::vector<double> s;
  for (const auto& r : t.records) s.push_back(r.theta[0]);
  return s;
}

}  // namespace

TEST(SeriesStats, IidNormal) {
  RngStream r(1);
  std::vector<double> x(100000);
  for (auto& v : x) v = r.normal();
  const auto s = series_stats(x);
  EXPECT_GE(s.iact, 0.8);
  EXPECT_LE(s.iact, 1.2);
  EXPECT_NEAR(s.asvar, s.iact * s.variance, 1e-15);
}

TEST(SeriesStats, Ar1) {
  const auto x = oracle::ar1(0.5, 1000000, 7);
  const auto s = series_stats(x);
  EXPECT_NEAR(s.iact, 3.0, 0.45);
  // analytic asvar: var = 1/(1-phi^2), tau = 3
  EXPECT_NEAR(s.asvar, 3.0 / 0.75, 0.15 * 4.0);
}

TEST(SeriesStats, Ar1ConvergesWithLength) {
  const double tau = 1.9 / 0.1;
  const double var = 1.0 / (1 - 0.81);
  double err_short = 0, err_long = 0;
  for (int s = 0; s < 10; ++s) {
    err_short += std::abs(series_stats(oracle::ar1(0.9, 20000, 100 + s)).asvar - tau * var);
    err_long += std::abs(series_stats(oracle::ar1(0.9, 400000, 200 + s)).asvar - tau * var);
  }
  EXPECT_LT(err_long, err_short);
  EXPECT_LT(err_long / 10, 0.1 * tau * var);
}

TEST(SeriesStats, ConstantSeries) {
  const std::vector<double> c(50, 2.0);
  const auto s = series_stats(c);
  EXPECT_EQ(s.asvar, 0.0);
  EXPECT_EQ(s.iact, 1.0);
  const std::vector<double> shortx(5, 1.0);
  EXPECT_THROW(series_stats(shortx), ParameterError);
}

TEST(SeriesStats, LiteralWindowDropsLagZero) {
  const auto x = oracle::ar1(0.5, 200000, 3);
  const auto g = series_stats(x, IactPolicy::kGeyer);
  const auto l = series_stats(x, IactPolicy::kLiteral);
  EXPECT_GE(l.iact, 0.0);
  EXPECT_NEAR(l.iact, (g.iact - 1.0) / 2.0, 0.05 * g.iact);
  EXPECT_EQ(parse_iact_policy("literal"), IactPolicy::kLiteral);
  EXPECT_EQ(parse_iact_policy("geyer"), IactPolicy::kGeyer);
}

TEST(Compare, SelfComparisonIsZero) {
  const auto x = oracle::ar1(0.3, 10000, 1);
  const auto rep = compare_chains({{"a", "t", x}, {"b", "t", x}});
  ASSERT_EQ(rep.pairs.size(), 2u);
  for (const auto& p : rep.pairs) {
    EXPECT_EQ(p.difference, 0.0);
    EXPECT_TRUE(p.ordered);
  }
}

TEST(Compare, SymmetricAndDeterministic) {
  const auto x = oracle::ar1(0.3, 10000, 1);
  const auto y = oracle::ar1(0.7, 10000, 2);
  const auto r1 = compare_chains({{"x", "t", x}, {"y", "t", y}});
  const auto r2 = compare_chains({{"y", "t", y}, {"x", "t", x}});
  EXPECT_EQ(to_json(r1).dump(), to_json(compare_chains({{"x", "t", x}, {"y", "t", y}})).dump());
  auto find = [](const ComparisonReport& r, const std::string& a) {
    for (const auto& p : r.pairs)
      if (p.first == a) return p.difference;
    return std::nan("");
  };
  EXPECT_EQ(find(r1, "x"), find(r2, "x"));
  EXPECT_EQ(find(r1, "y"), -find(r1, "x"));
  EXPECT_FALSE(format_table(r1).empty());
}

TEST(Compare, Errors) {
  const auto x = oracle::ar1(0.3, 1000, 1);
  EXPECT_THROW(compare_chains({{"a", "t", x}}), ConfigError);
  EXPECT_THROW(compare_chains({{"a", "t", x}, {"b", "u", x}}), ConfigError);
  EXPECT_THROW(compare_chains({{"a", "t", x}, {"b", "t", x}}, {{"a", "zzz"}}), ConfigError);
}

TEST(Compare, PmmhNotWorseThanDa) {
  const auto data = lgssm_data();
  const UniformPrior prior(point(0.0), point(1.0));
  auto perturbed = data;
  perturbed.R *= 2.0;
  const auto approx =
      make_deterministic_estimator([&](const ParameterPoint& t) { return kalman_loglik(with_a(perturbed, t[0])); });
  const auto exact = make_pf_estimator([&](const ParameterPoint& t) { return LgssmModel(with_a(data, t[0])); }, 16,
                                       ResampleScheme::kSystematic, {});
  ChainConfig cfg;
  cfg.iterations = 10000;
  cfg.burn_in = 500;
  cfg.initial = point(0.5);
  int ordered = 0;
  const int pairs = 6;
  for (int r = 0; r < pairs; ++r) {
    const auto pm = run_pmmh(prior, ProposalState::isotropic(1, 0.2), exact, cfg, RngStream(1000 + r));
    const auto da = run_delayed_acceptance(prior, ProposalState::isotropic(1, 0.2), approx, exact, DaConfig{}, cfg,
                                           RngStream(2000 + r));
    const auto rep = compare_chains({{"pmmh", "A", thetas(pm.trace)}, {"da", "A", thetas(da.chain.trace)}});
    for (const auto& p : rep.pairs)
      if (p.first == "pmmh") ordered += p.ordered;
  }
  EXPECT_GE(ordered, pairs - 1);
}

TEST(Compare, IsBoundAgainstMh) {
  // deterministic exact likelihood: var of zeta-hat(f) vanishes for f(theta) = theta
  const auto data = lgssm_data();
  auto perturbed = data;
  perturbed.R *= 2.0;
  const auto ll = [&](double a) { return kalman_loglik(with_a(data, a)); };
  const auto ll0 = [&](double a) { return kalman_loglik(with_a(perturbed, a)); };
  // marginal weight w(a) proportional to L/L0, normalized so E_{pi0}[w] = 1
  const int grid = 4000;
  double z = 0.0, z0 = 0.0, mean = 0.0, shift = ll(0.5), shift0 = ll0(0.5);
  for (int i = 0; i <= grid; ++i) {
    const double a = (i + 0.5) / (grid + 1);
    z += std::exp(ll(a) - shift);
    z0 += std::exp(ll0(a) - shift0);
    mean += a * std::exp(ll(a) - shift);
  }
  mean /= z;
  double sup_w = 0.0, var_term = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double a = (i + 0.5) / (grid + 1);
    const double w = std::exp(ll(a) - shift - ll0(a) + shift0) * z0 / z;
    sup_w = std::max(sup_w, w);
    const double p0 = std::exp(ll0(a) - shift0) / z0;
    var_term += p0 * std::pow(w * (a - mean), 2);
  }

  const UniformPrior prior(point(0.0), point(1.0));
  ChainConfig cfg;
  cfg.iterations = 40000;
  cfg.burn_in = 1000;
  cfg.initial = point(0.5);
  const auto exact = make_deterministic_estimator([&](const ParameterPoint& t) { return ll(t[0]); });
  const auto approx = make_deterministic_estimator([&](const ParameterPoint& t) { return ll0(t[0]); });
  const auto mh = run_pmmh(prior, ProposalState::isotropic(1, 0.2), exact, cfg, RngStream(5));

  const WeightFunction weight = [&](const ParameterPoint& t, double log_approx, std::span<const double>, RngStream&) {
    WeightDraw d;
    d.xi_one = std::exp(ll(t[0]) - log_approx);
    d.center = {t[0]};
    d.xi_centered = {0.0};
    return d;
  };
  std::vector<double> totals;
  for (int r = 0; r < 5; ++r) {
    const auto is = run_mcmc_is(prior, ProposalState::isotropic(1, 0.2), approx, weight, 0.0, 1, cfg, IsConfig{},
                                RngStream(50 + r));
    totals.push_back(is.estimates[0].total);
  }
  double tm = 0.0, tv = 0.0;
  for (double t : totals) tm += t / totals.size();
  for (double t : totals) tv += (t - tm) * (t - tm) / (totals.size() - 1);

  NamedTrace is_trace{"mcmc-is", "A", thetas(mh.trace), tm, std::sqrt(tv / totals.size())};
  BoundSpec b;
  b.name = "mcmc-is";
  b.reference = "mh";
  b.sup_weight = sup_w;
  b.factor = sup_w;
  b.offset = 3.0 * var_term / sup_w;
  const auto rep = compare_chains({{"mh", "A", thetas(mh.trace)}, is_trace}, {b});
  ASSERT_EQ(rep.bounds.size(), 1u);
  EXPECT_TRUE(rep.bounds[0].holds) << rep.bounds[0].lhs << " vs " << rep.bounds[0].rhs;
  EXPECT_GT(sup_w, 1.0);
}

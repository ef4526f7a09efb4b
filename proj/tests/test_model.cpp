#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "mcis/core/errors.hpp"
#include "mcis/model/abc_model.hpp"
#include "mcis/model/euler.hpp"
#include "mcis/model/gillespie.hpp"
#include "mcis/model/lgssm.hpp"
#include "oracles.hpp"

using namespace mcis;

namespace {

LinearGaussianSSM reference_model() {
  LinearGaussianSSM m;
  m.A = 0.9;
  m.Q = 0.25;
  m.H = 1.0;
  m.R = 1.0;
  m.m0 = 0.0;
  m.P0 = 1.0;
  m.y = {0.3, -0.5, 1.2, 0.8, -0.1};
  return m;
}

std::shared_ptr<const DiffusionSSM> ssm_with(Diffusion d, std::vector<double> y = {0.0, 0.0}) {
  auto s = std::make_shared<DiffusionSSM>();
  s->diffusion = std::move(d);
  s->observations = std::move(y);
  s->interval = 1.0;
  return s;
}

}  // namespace

TEST(Kalman, SingleObservation) {
  LinearGaussianSSM m;
  m.P0 = 0.0;
  m.y = {0.0};
  EXPECT_NEAR(kalman_loglik(m), -0.5 * std::log(2 * M_PI), 1e-14);
}

TEST(Kalman, DeterministicLatent) {
  LinearGaussianSSM m;
  m.A = 1.0;
  m.Q = 0.0;
  m.P0 = 0.0;
  m.m0 = 0.7;
  m.H = 2.0;
  m.R = 0.5;
  m.y = {1.0, 1.5, 2.0};
  double expect = 0.0;
  for (double y : m.y) expect += -0.5 * std::log(2 * M_PI * 0.5) - (y - 1.4) * (y - 1.4) / (2 * 0.5);
  EXPECT_NEAR(kalman_loglik(m), expect, 1e-12);
  const auto means = kalman_smoother_means(m);
  for (double v : means) EXPECT_NEAR(v, 0.7, 1e-12);
}

TEST(Kalman, MatchesJointGaussianDensity) {
  const auto m = reference_model();
  const double ref = oracle::joint_gaussian_loglik(m);
  EXPECT_NEAR(kalman_loglik(m), ref, 1e-10 * std::abs(ref));
  // further models with n <= 5
  RngStream r(11);
  for (int trial = 0; trial < 20; ++trial) {
    LinearGaussianSSM x;
    x.A = 2.0 * r.uniform() - 1.0;
    x.Q = 0.1 + r.uniform();
    x.H = 0.5 + r.uniform();
    x.R = 0.2 + r.uniform();
    x.m0 = r.normal();
    x.P0 = 0.1 + r.uniform();
    const int n = 1 + static_cast<int>(r.below(5));
    for (int p = 0; p < n; ++p) x.y.push_back(r.normal());
    const double o = oracle::joint_gaussian_loglik(x);
    EXPECT_NEAR(kalman_loglik(x), o, 1e-10 * std::abs(o));
  }
}

TEST(Kalman, SmootherMatchesConditioning) {
  const auto m = reference_model();
  const auto ref = oracle::joint_gaussian_smoother(m);
  const auto got = kalman_smoother_means(m);
  ASSERT_EQ(got.size(), ref.size());
  for (std::size_t p = 0; p < ref.size(); ++p) EXPECT_NEAR(got[p], ref[p], 1e-10);
}

TEST(Kalman, UninformativeObservations) {
  auto m = reference_model();
  m.R = 1e12;
  m.m0 = 1.5;
  const auto means = kalman_smoother_means(m);
  for (std::size_t p = 0; p < means.size(); ++p) EXPECT_NEAR(means[p], 1.5 * std::pow(0.9, p), 1e-4);
}

TEST(Kalman, RejectsInvalidVariance) {
  auto m = reference_model();
  m.R = 0.0;
  EXPECT_THROW(kalman_loglik(m), ParameterError);
  m.R = 1.0;
  m.Q = -1.0;
  EXPECT_THROW(kalman_loglik(m), ParameterError);
}

TEST(Euler, StepArithmetic) {
  const EulerDiffusionModel zero(ssm_with(Diffusion::custom([](double) { return 0.0; }, [](double) { return 0.0; })), 0);
  EXPECT_EQ(euler_step(zero, 1.25, 0.7), 1.25);

  auto ou = std::make_shared<DiffusionSSM>();
  ou->diffusion = Diffusion::ornstein_uhlenbeck(-1.0, 0.3);
  ou->observations = {0.0, 0.0};
  ou->interval = 1.0;
  const EulerDiffusionModel ou1(ou, 1);  // h = 0.5
  EXPECT_DOUBLE_EQ(euler_step(ou1, 1.0, 0.0), 0.5);

  const EulerDiffusionModel gbm(ssm_with(Diffusion::geometric_brownian(0.1, 0.2)), 2);  // h = 0.25
  EXPECT_NEAR(euler_step(gbm, 2.0, 0.3), 2.17, 1e-15);
}

TEST(Euler, OverflowCarriesContext) {
  auto s = std::make_shared<DiffusionSSM>();
  s->diffusion = Diffusion::custom([](double x) { return x * x * 1e300; }, [](double) { return 0.0; });
  s->observations = {0.0, 0.0};
  s->theta = {3.0};
  const EulerDiffusionModel m(s, 0);
  try {
    euler_step(m, 1e5, 0.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.state(), 1e5);
    EXPECT_EQ(e.level(), 0);
    EXPECT_EQ(e.theta(), std::vector<double>{3.0});
  }
}

TEST(Euler, LinearInIncrementWithAdditiveNoise) {
  const EulerDiffusionModel m(ssm_with(Diffusion::ornstein_uhlenbeck(-0.5, 0.8)), 1);
  const double base = euler_step(m, 0.4, 0.0);
  EXPECT_NEAR(euler_step(m, 0.4, 0.3) - base, 0.8 * 0.3, 1e-15);
  EXPECT_NEAR(euler_step(m, 0.4, -0.6) - base, 0.8 * -0.6, 1e-15);
}

TEST(CoupledEuler, ZeroDriftUnitDiffusionAgree) {
  auto s = ssm_with(Diffusion::ornstein_uhlenbeck(0.0, 1.0));
  for (int level = 1; level <= 4; ++level) {
    const CoupledEulerModel m(s, level);
    RngStream r(5 + level);
    const auto [f, c] = coupled_euler_interval(m, 0.0, 0.0, r);
    EXPECT_NEAR(f, c, 1e-12);
    RngStream r2(5 + level);
    const auto again = coupled_euler_interval(m, 0.0, 0.0, r2);
    EXPECT_EQ(again.first, f);
    EXPECT_EQ(again.second, c);
  }
}

TEST(CoupledEuler, OdeErrorHalvesPerLevel) {
  // dx = -x dt, exact x(1) = e^{-1}
  auto s = ssm_with(Diffusion::ornstein_uhlenbeck(-1.0, 0.0));
  std::vector<double> gap;
  for (int level = 1; level <= 8; ++level) {
    const CoupledEulerModel m(s, level);
    RngStream r(1);
    const auto [f, c] = coupled_euler_interval(m, 1.0, 1.0, r);
    gap.push_back(std::abs(f - c));
    // fine solution converges to the fine-grid ODE solve
    EXPECT_NEAR(f, std::pow(1.0 - std::ldexp(1.0, -level), 1 << level), 1e-12);
  }
  for (std::size_t i = 4; i < gap.size(); ++i) EXPECT_NEAR(gap[i] / gap[i - 1], 0.5, 0.06);
}

TEST(CoupledEuler, FineMarginalMatchesSingleLevel) {
  auto s = std::make_shared<DiffusionSSM>();
  s->diffusion = Diffusion::ornstein_uhlenbeck(-0.7, 0.9);
  s->observations = {0.0, 0.0};
  s->interval = 1.0;
  const int level = 3;
  const CoupledEulerModel cm(s, level);
  const EulerDiffusionModel fm(s, level);
  const int n = 100000;
  double s1 = 0, s2 = 0, t1 = 0, t2 = 0;
  RngStream root(77);
  for (int i = 0; i < n; ++i) {
    RngStream a = root.substream(StreamTag::kReplicate, i, 0);
    RngStream b = root.substream(StreamTag::kReplicate, i, 1);
    const double x = coupled_euler_interval(cm, 0.5, 0.5, a).first;
    const double prev = 0.5;
    const double y = fm.sample_transition(1, std::span<const double>(&prev, 1), b);
    s1 += x;
    s2 += x * x;
    t1 += y;
    t2 += y * y;
  }
  const double mx = s1 / n, my = t1 / n;
  const double vx = s2 / n - mx * mx, vy = t2 / n - my * my;
  EXPECT_NEAR(mx, my, 4 * std::sqrt((vx + vy) / n));
  EXPECT_NEAR(vx, vy, 4 * std::sqrt(2 * (vx * vx + vy * vy) / n));
  // and both match the Euler-chain closed form
  const auto lg = ou_euler_lgssm(*s, level);
  EXPECT_NEAR(mx, lg.A * 0.5, 4 * std::sqrt(vx / n));
  EXPECT_NEAR(vx, lg.Q, 4 * std::sqrt(2 * vx * vx / n));
}

TEST(OuOracle, EulerLgssmConvergesToExact) {
  DiffusionSSM s;
  s.diffusion = Diffusion::ornstein_uhlenbeck(-0.8, 0.6);
  s.observations = {0.1, 0.2};
  s.interval = 0.5;
  const auto exact = ou_exact_lgssm(s);
  double prev = INFINITY;
  for (int l = 0; l < 12; ++l) {
    const auto e = ou_euler_lgssm(s, l);
    const double err = std::abs(e.A - exact.A) + std::abs(e.Q - exact.Q);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Gillespie, ZeroRatesFreeze) {
  const auto net = lotka_volterra(0.0, 0.0, 0.0);
  RngStream r(1);
  const auto path = gillespie_simulate(net, {50, 100}, 10.0, r);
  EXPECT_TRUE(path.events.empty());
  EXPECT_EQ(path.final_state, (std::vector<std::int64_t>{50, 100}));
}

TEST(Gillespie, PureDeathMean) {
  ReactionNetwork net;
  net.rates = {0.3};
  net.reactants = {{1}};
  net.change = {{-1}};
  const int n0 = 40;
  const double t = 2.0;
  const int reps = 10000;
  double s = 0.0, s2 = 0.0;
  RngStream root(5);
  for (int i = 0; i < reps; ++i) {
    RngStream r = root.substream(StreamTag::kSimulate, i);
    const double x = static_cast<double>(gillespie_simulate(net, {n0}, t, r).final_state[0]);
    s += x;
    s2 += x * x;
  }
  const double mean = s / reps;
  const double sd = std::sqrt(s2 / reps - mean * mean);
  EXPECT_NEAR(mean, n0 * std::exp(-0.3 * t), 3 * sd / std::sqrt(reps));
}

TEST(Gillespie, SeededDeterminismAndObservation) {
  const auto net = lotka_volterra(0.5, 0.0025, 0.3);
  RngStream a(12), b(12);
  const auto p = gillespie_simulate(net, {71, 79}, 5.0, a);
  const auto q = gillespie_simulate(net, {71, 79}, 5.0, b);
  ASSERT_EQ(p.events.size(), q.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    EXPECT_EQ(p.events[i].time, q.events[i].time);
    EXPECT_EQ(p.events[i].reaction, q.events[i].reaction);
  }
  EXPECT_EQ(p.final_state, q.final_state);
  EXPECT_EQ(p.state_at(net, 5.0), p.final_state);
  RngStream c(12);
  const auto obs = gillespie_observe(net, {71, 79}, {1.0, 2.5, 5.0}, c, 10000000);
  ASSERT_EQ(obs.size(), 6u);
  EXPECT_EQ(obs[4], static_cast<double>(p.final_state[0]));
  EXPECT_EQ(obs[5], static_cast<double>(p.final_state[1]));
  const auto mid = p.state_at(net, 2.5);
  EXPECT_EQ(obs[2], static_cast<double>(mid[0]));
}

TEST(Gillespie, EventCapTruncates) {
  const auto net = lotka_volterra(5.0, 0.0, 0.0);  // pure birth
  RngStream r(1);
  const auto p = gillespie_simulate(net, {10, 0}, 100.0, r, 50);
  EXPECT_TRUE(p.truncated);
  EXPECT_EQ(p.events.size(), 50u);
}

TEST(GaussianAbc, Likelihood) {
  EXPECT_NEAR(gaussian_abc_likelihood(0.0, 1.0, 1.0, 0.0), 0.682689492137086, 1e-6);
  EXPECT_NEAR(gaussian_abc_likelihood(2.0, 1.0, 0.5, 0.0), 0.0605975, 1e-6);
  EXPECT_NEAR(gaussian_abc_likelihood(0.3, 1.0, 10.0 + 0.3, 0.0), 1.0, 1e-9);
  EXPECT_THROW(gaussian_abc_likelihood(0.0, 1.0, 0.0, 0.0), ParameterError);
  double prev = 0.0;
  for (double eps = 0.01; eps < 20; eps *= 1.3) {
    const double v = gaussian_abc_likelihood(1.5, 0.7, eps, -0.2);
    EXPECT_GE(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(GaussianAbc, DistanceProperties) {
  const GaussianAbcModel m(1.0, 0.0);
  const std::vector<double> a{0.3}, b{-1.1};
  EXPECT_EQ(m.distance(a, b), m.distance(b, a));
  EXPECT_EQ(m.distance(a, a), 0.0);
  EXPECT_GE(m.distance(a, b), 0.0);
  ParameterPoint t(1);
  t << 0.5;
  RngStream r1(3), r2(3);
  EXPECT_EQ(m.simulate(t, r1), m.simulate(t, r2));
}

TEST(LotkaVolterraAbc, TruncatedSimulationNeverAccepted) {
  const LotkaVolterraAbcModel m({50, 50}, {1.0, 2.0}, {50, 50, 50, 50}, 10);
  ParameterPoint t(3);
  t << std::log(5.0), std::log(0.001), std::log(0.1);
  RngStream r(2);
  EXPECT_EQ(m.simulate_distance(t, r), std::numeric_limits<double>::infinity());
}

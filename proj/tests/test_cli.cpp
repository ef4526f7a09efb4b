#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcis/cli/config.hpp"
#include "mcis/cli/experiment.hpp"
#include "mcis/core/errors.hpp"
#include "mcis/model/lgssm.hpp"

using namespace mcis;
using namespace mcis::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mcis_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kPf =
    "[experiment]\n"
    "algorithm = pf\n"
    "seed = 42\n"
    "[model]\n"
    "family = lgssm\n"
    "A = 0.8\n"
    "observations = 0.1, -0.3, 0.7, 1.2, 0.4\n"
    "[sampler]\n"
    "particles = 200\n"
    "runs = 8\n";

struct Ran {
  int code;
  std::string out, err;
};

Ran run(const std::string& cmd, const fs::path& cfg, RunOptions opt = {}) {
  std::ostringstream o, e;
  const int code = run_command(cmd, cfg, opt, o, e);
  return {code, o.str(), e.str()};
}

}  // namespace

TEST(Config, IniParsesSectionsAndLines) {
  const auto doc = parse_ini("# c\n[a]\nx = 1 ; trailing\n\n[b]\ny=two words\n");
  EXPECT_EQ(doc.sections.at("a").at("x").text, "1");
  EXPECT_EQ(doc.sections.at("a").at("x").line, 3);
  EXPECT_EQ(doc.sections.at("b").at("y").text, "two words");
}

TEST(Config, DuplicateKeyIsAnError) {
  try {
    parse_ini("[a]\nx = 1\nx = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Config, JsonMatchesIni) {
  const auto ini = parse_config(parse_ini(kPf));
  const auto js = parse_config(parse_json_config(
      R"({"experiment":{"algorithm":"pf","seed":42},"model":{"family":"lgssm","A":0.8,)"
      R"("observations":[0.1,-0.3,0.7,1.2,0.4]},"sampler":{"particles":200,"runs":8}})"));
  EXPECT_EQ(ini.model.observations, js.model.observations);
  EXPECT_EQ(ini.model.A, js.model.A);
  EXPECT_EQ(ini.sampler.particles, js.sampler.particles);
  EXPECT_EQ(ini.seed, js.seed);
}

TEST(Config, UnknownFieldNamesFieldAndLine) {
  const auto dir = scratch("unknown");
  const auto cfg = write_file(dir / "c.ini", std::string(kPf) + "partcles = 10\n");
  const auto r = run("validate", cfg);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("sampler.partcles"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(":11"), std::string::npos) << r.err;
}

TEST(Config, RhoOutOfRange) {
  const auto dir = scratch("rho");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = mlmc-is\nseed = 1\n"
                              "[model]\nfamily = ou\nsimulate_horizon = 4\n"
                              "[parameter]\nnames = drift\nlower = -2\nupper = 0\n"
                              "[sampler]\nrho = 1.5\n");
  const auto r = run("validate", cfg);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("sampler.rho"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("[0,1]"), std::string::npos) << r.err;
}

TEST(Config, MissingSeed) {
  const auto dir = scratch("seed");
  const auto cfg = write_file(dir / "c.ini", "[experiment]\nalgorithm = pf\n[model]\nobservations = 1,2\n");
  const auto r = run("run", cfg);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("experiment.seed"), std::string::npos) << r.err;
}

TEST(Config, AlgorithmFamilyMismatch) {
  const auto dir = scratch("mismatch");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = mlmc-is\nseed = 1\n"
                              "[model]\nfamily = lgssm\nobservations = 1,2\n"
                              "[parameter]\nnames = A\nlower = -1\nupper = 1\n");
  EXPECT_EQ(run("validate", cfg).code, kExitConfig);
}

TEST(Config, ObservationsFromCsv) {
  const auto dir = scratch("csv");
  write_file(dir / "y.csv", "0.5\n-1.25\n2\n");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = pf\nseed = 1\n"
                              "[model]\nfamily = lgssm\nobservations_file = y.csv\n");
  const auto c = load_config(cfg);
  EXPECT_EQ(c.model.observations, (std::vector<double>{0.5, -1.25, 2.0}));
}

TEST(Config, ValidateReportsSchedule) {
  const auto dir = scratch("describe");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = mlmc-is\nseed = 1\n"
                              "[model]\nfamily = ou\nsimulate_horizon = 4\n"
                              "[parameter]\nnames = drift\nlower = -2\nupper = 0\n"
                              "[sampler]\nrho = 0.5\nparticles = 8\n");
  const auto r = run("validate", cfg);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("OK", 0), 0u);
  EXPECT_NE(r.out.find("substeps"), std::string::npos);
}

TEST(Cli, PfSummaryAndRerunIdentical) {
  const auto dir = scratch("pf");
  const auto cfg = write_file(dir / "c.ini", kPf);
  RunOptions a{1, dir / "a"}, b{3, dir / "b"};
  ASSERT_EQ(run("run", cfg, a).code, kExitOk);
  ASSERT_EQ(run("run", cfg, b).code, kExitOk);
  const auto s = slurp(dir / "a" / "summary.json");
  EXPECT_EQ(s, slurp(dir / "b" / "summary.json"));
  EXPECT_EQ(slurp(dir / "a" / "pf_runs.jsonl"), slurp(dir / "b" / "pf_runs.jsonl"));
  const auto j = nlohmann::json::parse(s);
  ASSERT_TRUE(j.contains("loglik_hat"));
  for (const char* k : {"config_hash", "version", "seed", "cost_units", "timing_file"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(s.find('\r'), std::string::npos);

  // 8 filters of 200 particles around the exact log-likelihood
  LinearGaussianSSM m;
  m.A = 0.8;
  m.Q = 0.25;
  m.H = 1.0;
  m.R = 1.0;
  m.m0 = 0.0;
  m.P0 = 1.0;
  m.y = {0.1, -0.3, 0.7, 1.2, 0.4};
  EXPECT_NEAR(j["log_mean_likelihood"].get<double>(), kalman_loglik(m), 0.05);
  const auto t = nlohmann::json::parse(slurp(dir / "a" / "timing.json"));
  EXPECT_TRUE(t.contains("wall_clock_seconds"));
}

TEST(Cli, EnvironmentOverridesConfigWorkers) {
  auto c = parse_config(parse_ini(kPf));
  ::setenv("MCIS_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(c, {}), 5);
  EXPECT_EQ(resolve_workers(c, RunOptions{2, {}}), 2);
  ::setenv("MCIS_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(c, {}), ConfigError);
  ::unsetenv("MCIS_WORKERS");
  EXPECT_EQ(resolve_workers(c, {}), 1);
}

TEST(Cli, CompareReportsThreeAsymptoticVariances) {
  const auto dir = scratch("compare");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = compare\nseed = 3\n"
                              "[model]\nfamily = lgssm\nA = 0.6\nsimulate_horizon = 9\nsimulate_seed = 4\n"
                              "[parameter]\nnames = A\nlower = -0.99\nupper = 0.99\ninitial = 0.5\n"
                              "[sampler]\nparticles = 32\niterations = 600\nproposal_sd = 0.2\nreplicates = 2\n"
                              "[approx]\nkind = kalman\n");
  RunOptions o{2, dir / "out"};
  const auto r = run("compare", cfg, o);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "comparison.json"));
  ASSERT_EQ(j.size(), 2u);  // A and x_final
  for (const auto& rep : j) {
    std::set<std::string> names;
    for (const auto& e : rep["traces"]) {
      names.insert(e["name"].get<std::string>());
      EXPECT_GT(e["asvar"].get<double>(), 0.0);
    }
    EXPECT_EQ(names, (std::set<std::string>{"pmmh", "da", "mcmc-is"}));
  }
  EXPECT_NE(r.out.find("mcmc-is"), std::string::npos);
}

TEST(Cli, CompareCommandNeedsCompareAlgorithm) {
  const auto dir = scratch("compare_wrong");
  const auto cfg = write_file(dir / "c.ini", kPf);
  EXPECT_EQ(run("compare", cfg, RunOptions{1, dir / "o"}).code, kExitConfig);
}

TEST(Cli, GuardAbortExitsFour) {
  const auto dir = scratch("guard");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = mlmc-is\nseed = 1\n"
                              "[model]\nfamily = ou\nsimulate_horizon = 4\n"
                              "[parameter]\nnames = drift\nlower = -2\nupper = 0\ninitial = -0.5\n"
                              "[sampler]\nrho = 0.5\nparticles = 8\niterations = 50\nmax_cost_units = 10\n");
  const auto r = run("run", cfg, RunOptions{1, dir / "o"});
  EXPECT_EQ(r.code, kExitGuard) << r.err;
}

TEST(Cli, MissingConfigFile) {
  EXPECT_EQ(run("validate", "/nonexistent/mcis.ini").code, kExitConfig);
}

TEST(Cli, AbcWritesCurve) {
  const auto dir = scratch("abc");
  const auto cfg = write_file(dir / "c.ini",
                              "[experiment]\nalgorithm = abc-mcmc\nseed = 2\n"
                              "[model]\nfamily = gaussian-abc\n"
                              "[parameter]\nnames = theta\nprior = gaussian\nmean = 0\nsd = 5\ninitial = 0\n"
                              "[sampler]\niterations = 2000\nproposal_sd = 1\neps0 = 1\ntolerances = 0.5, 1\n");
  ASSERT_EQ(run("run", cfg, RunOptions{1, dir / "o"}).code, kExitOk);
  const auto curve = slurp(dir / "o" / "curve_theta.csv");
  EXPECT_EQ(curve.rfind("epsilon,estimate,ci_lo,ci_hi\n", 0), 0u);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
}

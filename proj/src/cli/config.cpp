#include "mcis/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"
#include "mcis/model/euler.hpp"
#include "mcis/model/gillespie.hpp"
#include "mcis/model/lgssm.hpp"

namespace mcis::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"algorithm", "seed", "output", "workers"}},
      {"model",
       {"family", "A", "Q", "H", "R", "m0", "P0", "drift", "sigma", "obs_variance", "interval", "level", "y_star",
        "rates", "init", "times", "max_events", "observations", "observations_file", "simulate_horizon",
        "simulate_seed"}},
      {"parameter", {"names", "prior", "lower", "upper", "mean", "sd", "initial"}},
      {"sampler",
       {"particles", "scheme", "iterations", "burn_in", "adapt", "proposal_sd", "eps_reg", "rho", "schedule", "eta",
        "alpha_star", "beta", "replicates", "thin", "eps0", "tolerances", "iact", "max_cost_units", "audit", "runs"}},
      {"approx", {"kind", "r_scale", "particles", "level"}},
  };
  return s;
}

// Typed access to one section, recording the line of every value.
class Section {
 public:
  Section(const ConfigDocument& doc, std::string name) : name_(std::move(name)) {
    auto it = doc.sections.find(name_);
    if (it != doc.sections.end()) values_ = &it->second;
  }

  bool present() const { return values_ != nullptr; }
  bool has(const std::string& key) const { return values_ && values_->count(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(msg, field(key), line(key));
  }
  std::string field(const std::string& key) const { return name_ + "." + key; }
  int line(const std::string& key) const {
    if (!has(key)) return 0;
    return values_->at(key).line;
  }

  std::string text(const std::string& key) const { return trim(values_->at(key).text); }

  std::string str(const std::string& key, const std::string& def) const { return has(key) ? text(key) : def; }

  std::string required(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field '" + field(key) + "'", field(key));
    return text(key);
  }

  double real(const std::string& key, double def) const { return has(key) ? parse_real(key, text(key)) : def; }

  long integer(const std::string& key, long def) const { return has(key) ? parse_int(key, text(key)) : def; }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto v = lower(text(key));
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail(key, "expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> words(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    std::string s = text(key);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(key)) out.push_back(parse_real(key, w));
    return out;
  }

  std::uint64_t unsigned64(const std::string& key) const {
    const auto s = text(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(key, "expected an unsigned 64-bit integer, got '" + s + "'");
    return v;
  }

  double parse_real(const std::string& key, const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      fail(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  long parse_int(const std::string& key, const std::string& s) const {
    long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
    // allow 2e5 style integers
    const double d = parse_real(key, s);
    if (d != std::floor(d) || std::abs(d) > 9e15) fail(key, "expected an integer, got '" + s + "'");
    return static_cast<long>(d);
  }

 private:
  std::string name_;
  const std::map<std::string, ConfigValue>* values_ = nullptr;
};

void check_schema(const ConfigDocument& doc) {
  const auto& s = schema();
  for (const auto& [sec, keys] : doc.sections) {
    auto it = s.find(sec);
    if (it == s.end()) {
      const int line = keys.empty() ? 0 : keys.begin()->second.line;
      throw ConfigError("unknown section '" + sec + "'", sec, line);
    }
    for (const auto& [k, v] : keys)
      if (!it->second.count(k)) throw ConfigError("unknown field '" + sec + "." + k + "'", sec + "." + k, v.line);
  }
}

Algorithm parse_algorithm(const Section& s) {
  const auto v = lower(s.required("algorithm"));
  if (v == "pf") return Algorithm::kPf;
  if (v == "pmmh") return Algorithm::kPmmh;
  if (v == "da") return Algorithm::kDa;
  if (v == "mcmc-is") return Algorithm::kMcmcIs;
  if (v == "mlmc-is") return Algorithm::kMlmcIs;
  if (v == "abc-mcmc") return Algorithm::kAbcMcmc;
  if (v == "abc-adaptive") return Algorithm::kAbcAdaptive;
  if (v == "compare") return Algorithm::kCompare;
  s.fail("algorithm", "unknown algorithm '" + v +
                          "' (expected pf, pmmh, da, mcmc-is, mlmc-is, abc-mcmc, abc-adaptive or compare)");
}

Family parse_family(const Section& s) {
  const auto v = lower(s.required("family"));
  if (v == "lgssm") return Family::kLgssm;
  if (v == "ou") return Family::kOu;
  if (v == "gbm") return Family::kGbm;
  if (v == "gaussian-abc") return Family::kGaussianAbc;
  if (v == "lotka-volterra") return Family::kLotkaVolterra;
  s.fail("family", "unknown model family '" + v + "' (expected lgssm, ou, gbm, gaussian-abc or lotka-volterra)");
}

bool is_ssm(Family f) { return f == Family::kLgssm || f == Family::kOu || f == Family::kGbm; }
bool is_abc(Family f) { return f == Family::kGaussianAbc || f == Family::kLotkaVolterra; }

std::vector<std::string> allowed_parameters(Family f) {
  switch (f) {
    case Family::kLgssm: return {"A", "Q", "H", "R", "m0", "P0"};
    case Family::kOu:
    case Family::kGbm: return {"drift", "sigma"};
    case Family::kGaussianAbc: return {"theta"};
    case Family::kLotkaVolterra: return {"log_c1", "log_c2", "log_c3"};
  }
  return {};
}

std::vector<double> read_numbers_file(const std::filesystem::path& p, const Section& s) {
  std::ifstream in(p);
  if (!in) s.fail("observations_file", "cannot open observation file '" + p.string() + "'");
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::string t = tok;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream ts(t);
    std::string w;
    while (ts >> w) out.push_back(s.parse_real("observations_file", w));
  }
  return out;
}

DiffusionSSM diffusion_of(const ModelConfig& m) {
  DiffusionSSM d;
  d.diffusion = m.family == Family::kOu ? Diffusion::ornstein_uhlenbeck(m.drift, m.sigma)
                                        : Diffusion::geometric_brownian(m.drift, m.sigma);
  d.observations = m.observations;
  d.obs_variance = m.obs_variance;
  d.interval = m.interval;
  d.m0 = m.m0;
  d.P0 = m.P0;
  return d;
}

LinearGaussianSSM lgssm_of(const ModelConfig& m) {
  LinearGaussianSSM l;
  l.A = m.A;
  l.Q = m.Q;
  l.H = m.H;
  l.R = m.R;
  l.m0 = m.m0;
  l.P0 = m.P0;
  l.y = m.observations;
  return l;
}

std::vector<double> simulate_observations(const ModelConfig& m) {
  RngStream rng(m.simulate_seed);
  const int n = m.simulate_horizon;
  switch (m.family) {
    case Family::kLgssm: return simulate_lgssm(lgssm_of(m), n, rng);
    case Family::kOu: {
      auto d = diffusion_of(m);
      d.observations.assign(n + 1, 0.0);
      return simulate_lgssm(ou_exact_lgssm(d), n, rng);
    }
    case Family::kGbm: {
      // fine Euler path (2^10 substeps per interval) observed with Gaussian noise
      auto d = diffusion_of(m);
      d.observations.assign(2, 0.0);
      const EulerDiffusionModel fine(std::make_shared<const DiffusionSSM>(d), 10);
      std::vector<double> y;
      double x = fine.sample_initial(rng);
      for (int p = 0; p <= n; ++p) {
        if (p > 0) x = fine.sample_transition(p, std::span<const double>(&x, 1), rng);
        y.push_back(x + std::sqrt(m.obs_variance) * rng.normal());
      }
      return y;
    }
    case Family::kLotkaVolterra: {
      const auto net = lotka_volterra(m.rates[0], m.rates[1], m.rates[2]);
      bool truncated = false;
      auto y = gillespie_observe(net, m.init, m.times, rng, m.max_events, &truncated);
      if (truncated) throw ConfigError("simulated Lotka-Volterra data hit the event cap", "model.max_events");
      return y;
    }
    case Family::kGaussianAbc: break;
  }
  return {};
}

void parse_model(const ConfigDocument& doc, ExperimentConfig& c) {
  const Section s(doc, "model");
  if (!s.present()) throw ConfigError("missing required section [model]", "model");
  auto& m = c.model;
  m.family = parse_family(s);
  // family-specific keys
  static const std::map<Family, std::set<std::string>> own{
      {Family::kLgssm, {"A", "Q", "H", "R", "m0", "P0"}},
      {Family::kOu, {"drift", "sigma", "obs_variance", "interval", "level", "m0", "P0"}},
      {Family::kGbm, {"drift", "sigma", "obs_variance", "interval", "level", "m0", "P0"}},
      {Family::kGaussianAbc, {"sigma", "y_star"}},
      {Family::kLotkaVolterra, {"rates", "init", "times", "max_events"}},
  };
  static const std::set<std::string> shared{"family", "observations", "observations_file", "simulate_horizon",
                                            "simulate_seed"};
  for (const auto& [k, v] : doc.sections.at("model"))
    if (!shared.count(k) && !own.at(m.family).count(k))
      throw ConfigError("field 'model." + k + "' does not apply to family " + to_string(m.family), "model." + k,
                        v.line);

  m.A = s.real("A", m.A);
  m.Q = s.real("Q", m.Q);
  m.H = s.real("H", m.H);
  m.R = s.real("R", m.R);
  m.m0 = s.real("m0", m.m0);
  m.P0 = s.real("P0", m.P0);
  m.drift = s.real("drift", m.drift);
  m.sigma = s.real("sigma", m.family == Family::kGaussianAbc ? 1.0 : m.sigma);
  m.abc_sigma = m.sigma;
  m.obs_variance = s.real("obs_variance", m.obs_variance);
  m.interval = s.real("interval", m.interval);
  m.level = static_cast<int>(s.integer("level", m.level));
  m.y_star = s.real("y_star", m.y_star);
  if (s.has("rates")) m.rates = s.reals("rates");
  if (s.has("init")) {
    m.init.clear();
    for (double v : s.reals("init")) {
      if (v < 0 || v != std::floor(v)) s.fail("init", "initial counts must be nonnegative integers");
      m.init.push_back(static_cast<std::int64_t>(v));
    }
  }
  if (s.has("times")) m.times = s.reals("times");
  m.max_events = static_cast<std::size_t>(s.integer("max_events", static_cast<long>(m.max_events)));

  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0)) s.fail(key, std::string("must be positive, got ") + std::to_string(v));
  };
  auto nonneg = [&](const char* key, double v) {
    if (!(v >= 0.0)) s.fail(key, std::string("must be nonnegative, got ") + std::to_string(v));
  };
  switch (m.family) {
    case Family::kLgssm:
      positive("R", m.R);
      nonneg("Q", m.Q);
      nonneg("P0", m.P0);
      break;
    case Family::kOu:
    case Family::kGbm:
      nonneg("sigma", m.sigma);
      positive("obs_variance", m.obs_variance);
      positive("interval", m.interval);
      nonneg("P0", m.P0);
      if (m.level < 0 || m.level > 30) s.fail("level", "Euler level must be in [0, 30]");
      break;
    case Family::kGaussianAbc: positive("sigma", m.abc_sigma); break;
    case Family::kLotkaVolterra:
      if (m.rates.size() != 3) s.fail("rates", "expected three rates c1, c2, c3");
      for (double r : m.rates) nonneg("rates", r);
      if (m.init.size() != 2) s.fail("init", "expected two initial counts (prey, predator)");
      if (m.times.empty()) s.fail("times", "observation times are required");
      for (std::size_t i = 0; i < m.times.size(); ++i)
        if (!(m.times[i] > (i ? m.times[i - 1] : 0.0))) s.fail("times", "times must be positive and increasing");
      if (m.max_events < 1) s.fail("max_events", "must be >= 1");
      break;
  }

  if (m.family == Family::kGaussianAbc) {
    if (s.has("observations") || s.has("observations_file") || s.has("simulate_horizon"))
      s.fail(s.has("observations") ? "observations" : s.has("observations_file") ? "observations_file"
                                                                                  : "simulate_horizon",
             "gaussian-abc takes its observation from model.y_star");
    m.observations = {m.y_star};
    return;
  }
  const int sources = s.has("observations") + s.has("observations_file") + s.has("simulate_horizon");
  if (sources != 1)
    throw ConfigError("exactly one of model.observations, model.observations_file, model.simulate_horizon is required",
                      "model.observations", s.line("observations"));
  if (s.has("observations")) {
    m.observations = s.reals("observations");
  } else if (s.has("observations_file")) {
    auto p = std::filesystem::path(s.text("observations_file"));
    if (p.is_relative() && !c.source.empty()) p = c.source.parent_path() / p;
    m.observations = read_numbers_file(p, s);
  } else {
    m.simulate_horizon = static_cast<int>(s.integer("simulate_horizon", 0));
    if (m.family == Family::kLotkaVolterra) {
      if (m.simulate_horizon != static_cast<int>(m.times.size()) - 1)
        s.fail("simulate_horizon", "for lotka-volterra simulate_horizon must equal (number of times - 1)");
    } else if (m.simulate_horizon < 0) {
      s.fail("simulate_horizon", "must be >= 0");
    }
    if (s.has("simulate_seed")) m.simulate_seed = s.unsigned64("simulate_seed");
    m.observations = simulate_observations(m);
  }
  if (m.observations.empty()) s.fail("observations", "no observations given");
  if (m.family == Family::kLotkaVolterra && m.observations.size() != 2 * m.times.size())
    s.fail("observations", "expected " + std::to_string(2 * m.times.size()) + " counts (prey, predator per time)");
}

void parse_parameter(const ConfigDocument& doc, ExperimentConfig& c) {
  const Section s(doc, "parameter");
  auto& p = c.parameter;
  if (!s.present()) {
    if (c.algorithm != Algorithm::kPf)
      throw ConfigError("missing required section [parameter] for algorithm " + to_string(c.algorithm), "parameter");
    return;
  }
  p.names = s.words("names");
  if (p.names.empty()) s.fail("names", "at least one parameter name is required");
  const auto allowed = allowed_parameters(c.model.family);
  for (const auto& n : p.names)
    if (std::find(allowed.begin(), allowed.end(), n) == allowed.end())
      s.fail("names", "parameter '" + n + "' is not a parameter of family " + to_string(c.model.family));
  if (c.model.family == Family::kLotkaVolterra && p.names != allowed)
    s.fail("names", "lotka-volterra parameters must be log_c1, log_c2, log_c3 in this order");
  if (c.model.family == Family::kGaussianAbc && p.names.size() != 1) s.fail("names", "expected the single name theta");

  const std::size_t d = p.names.size();
  p.prior = lower(s.str("prior", "uniform"));
  if (p.prior == "uniform") {
    p.lower = s.reals("lower");
    p.upper = s.reals("upper");
    if (p.lower.size() != d) s.fail("lower", "expected " + std::to_string(d) + " lower bounds");
    if (p.upper.size() != d) s.fail("upper", "expected " + std::to_string(d) + " upper bounds");
    for (std::size_t i = 0; i < d; ++i)
      if (!(p.lower[i] < p.upper[i])) s.fail("upper", "upper bound must exceed lower bound for " + p.names[i]);
  } else if (p.prior == "gaussian") {
    p.mean = s.reals("mean");
    p.sd = s.reals("sd");
    if (p.mean.size() != d) s.fail("mean", "expected " + std::to_string(d) + " prior means");
    if (p.sd.size() != d) s.fail("sd", "expected " + std::to_string(d) + " prior standard deviations");
    for (double v : p.sd)
      if (!(v > 0)) s.fail("sd", "prior standard deviations must be positive");
  } else {
    s.fail("prior", "unknown prior '" + p.prior + "' (expected uniform or gaussian)");
  }
  if (s.has("initial")) {
    p.initial = s.reals("initial");
    if (p.initial.size() != d) s.fail("initial", "expected " + std::to_string(d) + " initial values");
  }
}

void parse_sampler(const ConfigDocument& doc, ExperimentConfig& c) {
  const Section s(doc, "sampler");
  auto& o = c.sampler;
  const long particles = s.integer("particles", static_cast<long>(o.particles));
  if (particles < 1) s.fail("particles", "must be >= 1");
  o.particles = static_cast<std::size_t>(particles);
  if (s.has("scheme")) {
    try {
      o.scheme = parse_resample_scheme(lower(s.text("scheme")));
    } catch (const ParameterError& e) {
      s.fail("scheme", std::string(e.what()) + " (expected multinomial, stratified, residual or systematic)");
    }
  }
  o.iterations = s.integer("iterations", o.iterations);
  if (o.iterations < 1) s.fail("iterations", "must be >= 1");
  o.burn_in = s.integer("burn_in", o.burn_in);
  if (o.burn_in < 0) s.fail("burn_in", "must be >= 0");
  o.adapt = s.boolean("adapt", o.adapt);
  o.proposal_sd = s.real("proposal_sd", o.proposal_sd);
  if (!(o.proposal_sd >= 0)) s.fail("proposal_sd", "must be >= 0");
  o.eps_reg = s.real("eps_reg", o.eps_reg);
  if (!(o.eps_reg >= 0)) s.fail("eps_reg", "must be >= 0");
  o.rho = s.real("rho", o.rho);
  o.eta = s.real("eta", o.eta);
  if (s.has("schedule")) {
    try {
      o.schedule = parse_schedule_variant(lower(s.text("schedule")));
    } catch (const ParameterError& e) {
      s.fail("schedule", e.what());
    }
  }
  try {
    build_schedule(o.rho, o.particles, o.schedule == ScheduleVariant::kPoint ? ScheduleVariant::kPlain : o.schedule,
                   o.eta);
  } catch (const ParameterError& e) {
    const std::string what = e.what();
    const char* key = what.find("eta") != std::string::npos ? "eta" : "rho";
    s.fail(key, what);
  }
  o.alpha_star = s.real("alpha_star", o.alpha_star);
  if (!(o.alpha_star > 0 && o.alpha_star < 1)) s.fail("alpha_star", "must lie in (0, 1)");
  o.beta = s.real("beta", o.beta);
  if (!(o.beta > 0)) s.fail("beta", "must be positive");
  o.replicates = static_cast<int>(s.integer("replicates", o.replicates));
  if (o.replicates < 1) s.fail("replicates", "must be >= 1");
  o.thin = s.integer("thin", o.thin);
  if (o.thin < 1) s.fail("thin", "must be >= 1");
  if (s.has("eps0")) {
    o.eps0 = s.real("eps0", 1.0);
    if (!(*o.eps0 > 0)) s.fail("eps0", "must be positive");
  }
  o.tolerances = s.reals("tolerances");
  for (double t : o.tolerances)
    if (!(t > 0)) s.fail("tolerances", "tolerances must be positive");
  if (s.has("iact")) {
    try {
      o.iact = parse_iact_policy(lower(s.text("iact")));
    } catch (const ParameterError& e) {
      s.fail("iact", e.what());
    }
  }
  o.max_cost_units = s.real("max_cost_units", o.max_cost_units);
  if (!(o.max_cost_units > 0)) s.fail("max_cost_units", "must be positive");
  o.audit = s.boolean("audit", o.audit);
  o.runs = static_cast<int>(s.integer("runs", o.runs));
  if (o.runs < 1) s.fail("runs", "must be >= 1");
}

void parse_approx(const ConfigDocument& doc, ExperimentConfig& c) {
  const Section s(doc, "approx");
  auto& a = c.approx;
  a.kind = lower(s.str("kind", c.model.family == Family::kLgssm ? "kalman" : "pf"));
  if (a.kind != "kalman" && a.kind != "pf") s.fail("kind", "unknown approximation '" + a.kind + "' (kalman or pf)");
  if (a.kind == "kalman" && c.model.family != Family::kLgssm)
    s.fail("kind", "the kalman approximation needs family lgssm");
  a.r_scale = s.real("r_scale", a.r_scale);
  if (!(a.r_scale > 0)) s.fail("r_scale", "must be positive");
  const long n = s.integer("particles", static_cast<long>(a.particles));
  if (n < 1) s.fail("particles", "must be >= 1");
  a.particles = static_cast<std::size_t>(n);
  a.level = static_cast<int>(s.integer("level", a.level));
  if (a.level < 0 || a.level > 30) s.fail("level", "Euler level must be in [0, 30]");
}

void check_compatibility(const ConfigDocument& doc, const ExperimentConfig& c) {
  const Section e(doc, "experiment");
  const auto a = c.algorithm;
  const auto f = c.model.family;
  auto bad = [&](const std::string& why) { e.fail("algorithm", why); };
  switch (a) {
    case Algorithm::kPf:
    case Algorithm::kPmmh:
    case Algorithm::kDa:
    case Algorithm::kMcmcIs:
      if (!is_ssm(f)) bad(to_string(a) + " needs a state space family (lgssm, ou or gbm)");
      break;
    case Algorithm::kMlmcIs:
      if (f != Family::kOu && f != Family::kGbm) bad("mlmc-is needs a diffusion family (ou or gbm)");
      break;
    case Algorithm::kAbcMcmc:
    case Algorithm::kAbcAdaptive:
      if (!is_abc(f)) bad(to_string(a) + " needs an ABC family (gaussian-abc or lotka-volterra)");
      break;
    case Algorithm::kCompare:
      if (!is_ssm(f)) bad("compare needs a state space family (lgssm, ou or gbm)");
      break;
  }
  const Section s(doc, "sampler");
  if (a == Algorithm::kAbcMcmc && !c.sampler.eps0)
    throw ConfigError("abc-mcmc needs sampler.eps0", "sampler.eps0");
  if (c.sampler.tolerances.size() && c.sampler.eps0)
    for (double t : c.sampler.tolerances)
      if (t > *c.sampler.eps0) s.fail("tolerances", "post-correction tolerances must not exceed eps0");
  if ((a == Algorithm::kAbcMcmc || a == Algorithm::kAbcAdaptive) && c.sampler.iterations < 100)
    s.fail("iterations", "ABC runs need at least 100 iterations for the confidence intervals");
  if (a == Algorithm::kAbcAdaptive && c.sampler.burn_in < 1)
    s.fail("burn_in", "abc-adaptive needs burn_in >= 1 adaptation iterations");
  if (c.sampler.schedule == ScheduleVariant::kPoint && a == Algorithm::kMlmcIs)
    s.fail("schedule", "the point schedule is a test device; use plain or log-factor");
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ConfigDocument parse_ini(const std::string& text) {
  ConfigDocument doc;
  doc.hash = fnv1a(text);
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s[0] == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header '" + s + "'", "", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", "", line);
      doc.sections[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + s + "'", "", line);
    if (section.empty()) throw ConfigError("key outside of any [section]", trim(s.substr(0, eq)), line);
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    // trailing comment
    for (std::size_t i = 0; i < value.size(); ++i)
      if ((value[i] == '#' || value[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(value[i - 1])))) {
        value = trim(value.substr(0, i));
        break;
      }
    if (key.empty()) throw ConfigError("empty key", section, line);
    auto& sec = doc.sections[section];
    if (sec.count(key)) throw ConfigError("duplicate field '" + section + "." + key + "'", section + "." + key, line);
    sec[key] = {value, line};
  }
  return doc;
}

ConfigDocument parse_json_config(const std::string& text) {
  ConfigDocument doc;
  doc.hash = fnv1a(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), "");
  }
  if (!j.is_object()) throw ConfigError("top level of a JSON config must be an object", "");
  auto scalar = [](const nlohmann::json& v, const std::string& field) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << v.get<double>();
      return os.str();
    }
    throw ConfigError("unsupported JSON value for '" + field + "'", field);
  };
  for (const auto& [sec, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("section '" + sec + "' must be an object", sec);
    auto& out = doc.sections[sec];
    for (const auto& [key, v] : body.items()) {
      const std::string field = sec + "." + key;
      if (v.is_array()) {
        std::string joined;
        for (const auto& x : v) joined += (joined.empty() ? "" : ",") + scalar(x, field);
        out[key] = {joined, 0};
      } else {
        out[key] = {scalar(v, field), 0};
      }
    }
  }
  return doc;
}

ConfigDocument load_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'", "");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) return parse_json_config(text);
  return parse_ini(text);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kPf: return "pf";
    case Algorithm::kPmmh: return "pmmh";
    case Algorithm::kDa: return "da";
    case Algorithm::kMcmcIs: return "mcmc-is";
    case Algorithm::kMlmcIs: return "mlmc-is";
    case Algorithm::kAbcMcmc: return "abc-mcmc";
    case Algorithm::kAbcAdaptive: return "abc-adaptive";
    case Algorithm::kCompare: return "compare";
  }
  return "?";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::kLgssm: return "lgssm";
    case Family::kOu: return "ou";
    case Family::kGbm: return "gbm";
    case Family::kGaussianAbc: return "gaussian-abc";
    case Family::kLotkaVolterra: return "lotka-volterra";
  }
  return "?";
}

ExperimentConfig parse_config(const ConfigDocument& doc, const std::filesystem::path& source) {
  check_schema(doc);
  ExperimentConfig c;
  c.hash = doc.hash;
  c.source = source;
  const Section e(doc, "experiment");
  if (!e.present()) throw ConfigError("missing required section [experiment]", "experiment");
  c.algorithm = parse_algorithm(e);
  if (!e.has("seed")) throw ConfigError("missing required field 'experiment.seed' (no default seed)", "experiment.seed");
  c.seed = e.unsigned64("seed");
  c.output = e.str("output", "out");
  c.workers = static_cast<int>(e.integer("workers", 1));
  if (c.workers < 1) e.fail("workers", "must be >= 1");
  parse_model(doc, c);
  parse_parameter(doc, c);
  parse_sampler(doc, c);
  parse_approx(doc, c);
  check_compatibility(doc, c);
  return c;
}

LinearGaussianSSM to_lgssm(const ModelConfig& model) { return lgssm_of(model); }
DiffusionSSM to_diffusion(const ModelConfig& model) { return diffusion_of(model); }

ModelConfig with_parameters(const ModelConfig& model, const std::vector<std::string>& names,
                            const ParameterPoint& theta) {
  ModelConfig m = model;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& n = names[i];
    const double v = theta[static_cast<Eigen::Index>(i)];
    if (n == "A") m.A = v;
    else if (n == "Q") m.Q = v;
    else if (n == "H") m.H = v;
    else if (n == "R") m.R = v;
    else if (n == "m0") m.m0 = v;
    else if (n == "P0") m.P0 = v;
    else if (n == "drift") m.drift = v;
    else if (n == "sigma") m.sigma = v;
  }
  return m;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(load_document(path), path); }

std::string describe(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "OK\n";
  os << "algorithm        " << to_string(c.algorithm) << "\n";
  os << "family           " << to_string(c.model.family) << "\n";
  os << "seed             " << c.seed << "\n";
  os << "config hash      " << std::hex << c.hash << std::dec << "\n";
  if (c.model.family != Family::kGaussianAbc) os << "observations     " << c.model.observations.size() << "\n";
  if (!c.parameter.names.empty()) {
    os << "parameters       ";
    for (const auto& n : c.parameter.names) os << n << ' ';
    os << "(" << c.parameter.prior << " prior)\n";
  }
  os << "iterations       " << c.sampler.iterations << " after " << c.sampler.burn_in << " burn-in\n";
  if (c.model.family == Family::kOu || c.model.family == Family::kGbm) {
    if (c.algorithm == Algorithm::kMlmcIs) {
      const auto s = build_schedule(c.sampler.rho, c.sampler.particles, c.sampler.schedule, c.sampler.eta);
      os << "level  p_l            N_l      substeps\n";
      for (int l = 0; l <= 8; ++l) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-6d %-14.6g %-8zu %ld\n", l, l == 0 ? 1.0 : s.pmf(l), s.particles(l),
                      1L << l);
        os << buf;
      }
    } else {
      os << "euler level      " << c.model.level << " (" << (1L << c.model.level) << " substeps per interval)\n";
    }
  }
  return os.str();
}

}  // namespace mcis::cli

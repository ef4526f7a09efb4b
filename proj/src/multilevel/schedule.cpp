#include "mcis/multilevel/schedule.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"

namespace mcis {

ScheduleVariant parse_schedule_variant(const std::string& name) {
  if (name == "plain") return ScheduleVariant::kPlain;
  if (name == "log_factor") return ScheduleVariant::kLogFactor;
  if (name == "point") return ScheduleVariant::kPoint;
  throw ParameterError("unknown schedule variant '" + name + "'");
}

std::string to_string(ScheduleVariant v) {
  switch (v) {
    case ScheduleVariant::kPlain:
      return "plain";
    case ScheduleVariant::kLogFactor:
      return "log_factor";
    case ScheduleVariant::kPoint:
      return "point";
  }
  return "unknown";
}

namespace {

double log_factor_term(double rho, double eta, int l) {
  const double dl = static_cast<double>(l);
  return -dl * (1.0 + rho) * std::numbers::ln2 + std::log(dl) + eta * std::log(std::log2(dl + 1.0));
}

}  // namespace

LevelSchedule build_schedule(double rho, std::size_t n_base, ScheduleVariant variant, double eta) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw ParameterError("rho must lie in the allowed range [0,1], got " + std::to_string(rho));
  if (n_base < 1) throw ParameterError("N_base must be >= 1");
  if (variant == ScheduleVariant::kLogFactor && !(eta > 1.0)) throw ParameterError("log-factor schedule needs eta > 1");
  if (variant == ScheduleVariant::kPoint) return point_schedule(1, n_base, rho);
  LevelSchedule s;
  s.rho_ = rho;
  s.eta_ = eta;
  s.n_base_ = n_base;
  s.variant_ = variant;
  if (variant == ScheduleVariant::kLogFactor) {
    // terms eventually decay like 2^{-l(1+rho)}; sum until negligible
    double z = 0.0;
    for (int l = 1; l < 4000; ++l) {
      const double t = std::exp(log_factor_term(rho, eta, l));
      z += t;
      if (l > 8 && t < 1e-20 * z) break;
    }
    s.log_norm_ = std::log(z);
  }
  return s;
}

LevelSchedule point_schedule(int level, std::size_t n_base, double rho) {
  if (level < 1) throw ParameterError("point schedule level must be >= 1");
  if (n_base < 1) throw ParameterError("N_base must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in the allowed range [0,1]");
  LevelSchedule s;
  s.rho_ = rho;
  s.n_base_ = n_base;
  s.variant_ = ScheduleVariant::kPoint;
  s.point_level_ = level;
  return s;
}

double LevelSchedule::pmf(int level) const {
  if (level < 1) return 0.0;
  switch (variant_) {
    case ScheduleVariant::kPoint:
      return level == point_level_ ? 1.0 : 0.0;
    case ScheduleVariant::kLogFactor:
      return std::exp(log_factor_term(rho_, eta_, level) - log_norm_);
    case ScheduleVariant::kPlain:
      break;
  }
  const double q = std::exp2(-(1.0 + rho_));
  return (1.0 - q) * std::exp(static_cast<double>(level - 1) * std::log(q));
}

std::size_t LevelSchedule::particles(int level) const {
  if (level <= 0) return n_base_;
  const double e = std::ceil(rho_ * static_cast<double>(level));
  const double n = std::ldexp(static_cast<double>(n_base_), static_cast<int>(e));
  if (!(n < 9.0e15)) throw ResourceGuardError("particle count overflow at level " + std::to_string(level), level);
  return static_cast<std::size_t>(n);
}

std::vector<double> LevelSchedule::head(int count) const {
  std::vector<double> out;
  for (int l = 1; l <= count; ++l) out.push_back(pmf(l));
  return out;
}

int sample_level(const LevelSchedule& s, RngStream& rng) {
  switch (s.variant()) {
    case ScheduleVariant::kPoint:
      return s.point_level();
    case ScheduleVariant::kPlain: {
      // P(L > l) = q^l
      const double log_q = -(1.0 + s.rho()) * std::numbers::ln2;
      const double v = std::floor(std::log(rng.uniform()) / log_q);
      return v >= 1e9 ? 1000000000 : 1 + static_cast<int>(v);
    }
    case ScheduleVariant::kLogFactor:
      break;
  }
  const double u = rng.uniform();
  double cum = 0.0;
  for (int l = 1;; ++l) {
    const double p = s.pmf(l);
    cum += p;
    if (u <= cum || p == 0.0) return l;
  }
}

nlohmann::json to_json(const LevelSchedule& s, int head) {
  nlohmann::json j;
  j["variant"] = to_string(s.variant());
  j["rho"] = s.rho();
  j["n_base"] = s.n_base();
  if (s.variant() == ScheduleVariant::kLogFactor) j["eta"] = s.eta();
  if (s.variant() == ScheduleVariant::kPoint) j["level"] = s.point_level();
  j["pmf_head"] = s.head(head);
  std::vector<std::size_t> n;
  for (int l = 1; l <= head; ++l) n.push_back(s.particles(l));
  j["particles_head"] = n;
  return j;
}

void CostLedger::add(double cost) {
  if (!(cost >= 0.0)) throw ParameterError("costs must be nonnegative");
  const double prev = total();
  costs_.push_back(cost);
  cumulative_.push_back(prev + cost);
}

double CostLedger::mean() const { return costs_.empty() ? 0.0 : total() / static_cast<double>(costs_.size()); }

std::size_t realized_length(const CostLedger& ledger, double kappa) {
  if (!(kappa >= 0.0)) throw ParameterError("budget must be >= 0");
  std::size_t m = 0;
  while (m < ledger.size() && ledger.cumulative(m + 1) <= kappa) ++m;
  return m;
}

double ire(const CostLedger& ledger, double asvar) {
  if (ledger.size() == 0) throw ParameterError("ire needs a nonempty ledger");
  return ledger.mean() * asvar;
}

nlohmann::json to_json(const CostLedger& ledger) {
  nlohmann::json j;
  j["iterations"] = ledger.size();
  j["total_cost"] = ledger.total();
  j["mean_cost"] = ledger.mean();
  return j;
}

}  // namespace mcis

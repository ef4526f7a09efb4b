#include "mcis/diagnostics/series.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mcis/core/errors.hpp"

namespace mcis {

IactPolicy parse_iact_policy(const std::string& name) {
  if (name == "geyer") return IactPolicy::kGeyer;
  if (name == "literal") return IactPolicy::kLiteral;
  throw ParameterError("unknown IACT window policy '" + name + "'");
}

SeriesStats series_stats(std::span<const double> x, IactPolicy policy) {
  const std::size_t n = x.size();
  if (n < 10) throw ParameterError("series_stats needs at least 10 values");
  SeriesStats s;
  s.length = n;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(n);
  std::vector<double> d(n);
  double g0 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    d[t] = x[t] - s.mean;
    g0 += d[t] * d[t];
  }
  g0 /= static_cast<double>(n);
  s.variance = g0;
  s.autocorrelations.push_back(1.0);
  if (!(g0 > 0.0)) {
    s.iact = 1.0;
    s.asvar = 0.0;
    s.standard_error = 0.0;
    return s;
  }

  auto rho = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) acc += d[t] * d[t + k];
    return acc / static_cast<double>(n) / g0;
  };

  // Geyer: Gamma_m = rho_{2m} + rho_{2m+1}, summed while positive, forced monotone.
  double gamma_sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  std::size_t last_lag = 0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double r0 = m == 0 ? 1.0 : rho(2 * m);
    const double r1 = rho(2 * m + 1);
    double gamma = r0 + r1;
    if (!(gamma > 0.0)) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    if (m > 0) s.autocorrelations.push_back(r0);
    s.autocorrelations.push_back(r1);
    gamma_sum += gamma;
    last_lag = 2 * m + 1;
  }
  s.window = last_lag;
  if (policy == IactPolicy::kGeyer) {
    s.iact = std::max(-1.0 + 2.0 * gamma_sum, 0.0);
  } else {
    double lit = 0.0;
    for (std::size_t k = 1; k < s.autocorrelations.size(); ++k) lit += s.autocorrelations[k];
    s.iact = std::max(lit, 0.0);
  }
  s.asvar = s.iact * s.variance;
  s.standard_error = std::sqrt(s.asvar / static_cast<double>(n));
  return s;
}

namespace {

TraceSummary summarize(const NamedTrace& t, int batches, IactPolicy policy) {
  TraceSummary out;
  out.name = t.name;
  const auto full = series_stats(t.series, policy);
  out.mean = full.mean;
  if (t.asvar) {
    out.asvar = *t.asvar;
    out.error = t.asvar_error.value_or(0.0);
    return out;
  }
  out.asvar = full.asvar;
  const std::size_t n = t.series.size();
  const std::size_t len = n / static_cast<std::size_t>(batches);
  if (batches < 2 || len < 10) {
    out.error = 0.0;
    return out;
  }
  std::vector<double> est;
  for (int b = 0; b < batches; ++b) {
    std::span<const double> part(t.series.data() + b * len, len);
    est.push_back(series_stats(part, policy).asvar);
  }
  double mu = 0.0;
  for (double v : est) mu += v;
  mu /= static_cast<double>(est.size());
  double ss = 0.0;
  for (double v : est) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(est.size() - 1));
  out.error = sd / std::sqrt(static_cast<double>(est.size()));
  return out;
}

}  // namespace

ComparisonReport compare_chains(const std::vector<NamedTrace>& traces, const std::vector<BoundSpec>& bounds,
                                int batches, IactPolicy policy) {
  if (traces.size() < 2) throw ConfigError("compare_chains needs at least two traces", "traces");
  for (const auto& t : traces)
    if (t.target != traces.front().target)
      throw ConfigError("traces declare different targets ('" + traces.front().target + "' vs '" + t.target + "')",
                        "target");
  ComparisonReport rep;
  for (const auto& t : traces) rep.traces.push_back(summarize(t, batches, policy));
  for (std::size_t a = 0; a < rep.traces.size(); ++a)
    for (std::size_t b = 0; b < rep.traces.size(); ++b) {
      if (a == b) continue;
      PairComparison p;
      p.first = rep.traces[a].name;
      p.second = rep.traces[b].name;
      p.difference = rep.traces[a].asvar - rep.traces[b].asvar;
      p.error = std::hypot(rep.traces[a].error, rep.traces[b].error);
      p.ordered = rep.traces[a].asvar <= rep.traces[b].asvar + 2.0 * p.error;
      rep.pairs.push_back(p);
    }
  auto find = [&](const std::string& name) -> const TraceSummary& {
    for (const auto& t : rep.traces)
      if (t.name == name) return t;
    throw ConfigError("bound check refers to unknown trace '" + name + "'", "bounds");
  };
  for (const auto& spec : bounds) {
    const auto& lhs = find(spec.name);
    const auto& ref = find(spec.reference);
    BoundCheck c;
    c.name = spec.name;
    c.reference = spec.reference;
    c.sup_weight = spec.sup_weight;
    c.lhs = lhs.asvar;
    c.rhs = spec.factor * (ref.asvar + spec.offset);
    c.holds = c.lhs <= c.rhs + 2.0 * std::hypot(lhs.error, spec.factor * ref.error);
    rep.bounds.push_back(c);
  }
  return rep;
}

nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json j;
  j["traces"] = nlohmann::json::array();
  for (const auto& t : report.traces)
    j["traces"].push_back({{"name", t.name}, {"asvar", t.asvar}, {"error", t.error}, {"mean", t.mean}});
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : report.pairs)
    j["pairs"].push_back({{"first", p.first},
                          {"second", p.second},
                          {"difference", p.difference},
                          {"error", p.error},
                          {"ordered", p.ordered}});
  j["bounds"] = nlohmann::json::array();
  for (const auto& b : report.bounds)
    j["bounds"].push_back({{"name", b.name},
                           {"reference", b.reference},
                           {"sup_weight", b.sup_weight},
                           {"lhs", b.lhs},
                           {"rhs", b.rhs},
                           {"holds", b.holds}});
  return j;
}

std::string format_table(const ComparisonReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "trace" << std::right << std::setw(14) << "mean" << std::setw(14) << "asvar"
     << std::setw(14) << "error" << '\n';
  os << std::setprecision(6);
  for (const auto& t : report.traces)
    os << std::left << std::setw(16) << t.name << std::right << std::setw(14) << t.mean << std::setw(14) << t.asvar
       << std::setw(14) << t.error << '\n';
  for (const auto& p : report.pairs)
    os << p.first << " <= " << p.second << " (+2 err): " << (p.ordered ? "yes" : "no") << "  diff " << p.difference
       << " +- " << p.error << '\n';
  for (const auto& b : report.bounds)
    os << "bound " << b.name << " vs " << b.reference << ": " << b.lhs << " <= " << b.rhs << " "
       << (b.holds ? "holds" : "violated") << '\n';
  return os.str();
}

}  // namespace mcis

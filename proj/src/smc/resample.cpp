#include "mcis/smc/resample.hpp"

#include <algorithm>
#include <cmath>

#include "mcis/core/errors.hpp"
#include "mcis/core/math.hpp"

namespace mcis {

ResampleScheme parse_resample_scheme(const std::string& name) {
  if (name == "multinomial") return ResampleScheme::kMultinomial;
  if (name == "stratified") return ResampleScheme::kStratified;
  if (name == "residual") return ResampleScheme::kResidual;
  if (name == "systematic") return ResampleScheme::kSystematic;
  throw ParameterError("unknown resampling scheme '" + name + "'");
}

std::string to_string(ResampleScheme scheme) {
  switch (scheme) {
    case ResampleScheme::kMultinomial:
      return "multinomial";
    case ResampleScheme::kStratified:
      return "stratified";
    case ResampleScheme::kResidual:
      return "residual";
    case ResampleScheme::kSystematic:
      return "systematic";
  }
  return "unknown";
}

namespace {

// Maps ascending points u in [0, total) to indices through the cumulative
// weights. Zero-weight indices are never selected.
void sweep(std::span<const double> w, std::span<const double> points, std::vector<std::uint32_t>& out) {
  const std::size_t n = w.size();
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (w[i] > 0.0) last_positive = i;
  std::size_t j = 0;
  double cum = w[0];
  for (double u : points) {
    while (j < last_positive && (u >= cum || w[j] == 0.0)) cum += w[++j];
    out.push_back(static_cast<std::uint32_t>(j));
  }
}

// n sorted uniforms on (0, 1) via normalized exponential spacings.
std::vector<double> sorted_uniforms(std::size_t n, RngStream& rng) {
  std::vector<double> e(n + 1);
  double s = 0.0;
  for (auto& v : e) {
    v = rng.exponential();
    s += v;
  }
  std::vector<double> u(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += e[i];
    u[i] = acc / s;
  }
  return u;
}

void multinomial(std::span<const double> w, double total, std::size_t count, RngStream& rng,
                 std::vector<std::uint32_t>& out) {
  auto u = sorted_uniforms(count, rng);
  for (auto& v : u) v *= total;
  sweep(w, u, out);
}

}  // namespace

std::vector<std::uint32_t> resample(std::span<const double> weights, ResampleScheme scheme, RngStream& rng) {
  const std::size_t n = weights.size();
  if (n == 0) throw ParameterError("resample: empty weight vector");
  double total = 0.0;
  for (double v : weights) {
    if (std::isnan(v) || v < 0.0) throw ModelError("resample: weights must be nonnegative numbers");
    total += v;
  }
  if (!(total > 0.0)) throw DegenerateError("resample: all weights are zero (filter collapse)");
  if (!std::isfinite(total)) throw ModelError("resample: infinite total weight");

  std::vector<std::uint32_t> out;
  out.reserve(n);
  const double dn = static_cast<double>(n);
  switch (scheme) {
    case ResampleScheme::kMultinomial:
      multinomial(weights, total, n, rng, out);
      break;
    case ResampleScheme::kStratified: {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + rng.uniform()) / dn * total;
      sweep(weights, u, out);
      break;
    }
    case ResampleScheme::kSystematic: {
      std::vector<double> u(n);
      const double u0 = rng.uniform();
      for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + u0) / dn * total;
      sweep(weights, u, out);
      break;
    }
    case ResampleScheme::kResidual: {
      std::vector<double> residual(n);
      std::size_t taken = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double expected = dn * weights[i] / total;
        std::size_t k = static_cast<std::size_t>(std::floor(expected));
        k = std::min(k, n - taken);
        for (std::size_t c = 0; c < k; ++c) out.push_back(static_cast<std::uint32_t>(i));
        taken += k;
        residual[i] = std::max(expected - static_cast<double>(k), 0.0);
      }
      const std::size_t rest = n - taken;
      if (rest > 0) {
        double rtotal = 0.0;
        for (double v : residual) rtotal += v;
        if (rtotal > 0.0) {
          multinomial(residual, rtotal, rest, rng, out);
        } else {
          multinomial(weights, total, rest, rng, out);
        }
      }
      break;
    }
  }
  return out;
}

std::vector<std::uint32_t> resample_log(std::span<const double> log_weights, ResampleScheme scheme,
                                        RngStream& rng) {
  double mx = kNegInf;
  for (double v : log_weights) {
    if (std::isnan(v)) throw ModelError("resample: NaN log weight");
    mx = std::max(mx, v);
  }
  if (mx == kNegInf) throw DegenerateError("resample: all weights are zero (filter collapse)");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
  return resample(w, scheme, rng);
}

}  // namespace mcis

#pragma once

#include <span>

#include <nlohmann/json_fwd.hpp>

#include "mcis/smc/particle_filter.hpp"

namespace mcis {

struct RatioEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// sum_k p-hat_k(phi) / sum_k L-hat_k over independent runs, with a
// delta-method standard error (infinite for a single run).
RatioEstimate ratio_estimate(std::span<const SmootherEstimate> estimates, std::size_t phi_index);

nlohmann::json cloud_summary(const ParticleCloud<double>& cloud);

}  // namespace mcis

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcis/core/rng.hpp"

namespace mcis {

enum class ResampleScheme { kMultinomial, kStratified, kResidual, kSystematic };

ResampleScheme parse_resample_scheme(const std::string& name);
std::string to_string(ResampleScheme scheme);

// Draws N ancestor indices (0-based) with E[#{k: A_k = i}] = N w_i / sum(w).
// Weights are linear and nonnegative; throws DegenerateError if they sum to 0
// and ModelError on NaN or negative entries.
std::vector<std::uint32_t> resample(std::span<const double> weights, ResampleScheme scheme, RngStream& rng);

// Same, from log weights (-inf allowed). Exponentiates once after a max shift.
std::vector<std::uint32_t> resample_log(std::span<const double> log_weights, ResampleScheme scheme,
                                        RngStream& rng);

}  // namespace mcis

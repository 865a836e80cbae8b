#pragma once

#include <cstdint>
#include <string>

#include "abaf/nn/layers.hpp"

namespace abaf::nn {

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "<parameter>[index]" or "input[index]"
    std::size_t checked = 0;
};

/// Central-difference check of `layer` at `input` for the scalar loss
/// sum(forward(x) * R), R ~ N(0,1) drawn from `seed`. Covers every parameter
/// element and, if `check_input`, every input element.
GradCheckResult grad_check(Layer& layer, const Tensor& input, std::uint64_t seed, double eps = 1e-5,
                           bool train = true, bool check_input = true);

}  // namespace abaf::nn

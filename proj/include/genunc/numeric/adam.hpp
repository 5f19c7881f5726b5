#pragma once

#include <cstdint>

#include "genunc/numeric/param_vector.hpp"

namespace genunc::numeric {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step_count = 0;
  AdamConfig hp;

  static AdamState init(std::size_t n, AdamConfig hp = {});
};

/// Bias-corrected Adam update of `params` in place.
/// Throws NumericError naming the first non-finite gradient coordinate.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad);

}  // namespace genunc::numeric

#pragma once

#include <span>

#include "genunc/diffusion/schedule.hpp"
#include "genunc/numeric/mlp.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::diffusion {

/// Network inputs and regression targets for one stochastic loss evaluation.
struct RegressionBatch {
  Matrix inputs;              // x_t
  std::vector<double> times;  // network time input
  Matrix targets;             // eps or velocity
};

/// t ~ U{1..T}, eps ~ N(0, I) per row; inputs = forward_noise(x0, t, eps).
RegressionBatch draw_diffusion_batch(const NoiseSchedule& schedule, const Matrix& x0, numeric::Rng& rng);

/// x_noise ~ N(0, I), t ~ U[0, 1]; inputs = (1 - t) x_noise + t x_data,
/// targets = x_data - x_noise. Times are scaled by kFlowTimeScale.
RegressionBatch draw_flow_batch(const Matrix& x_data, numeric::Rng& rng);

struct RegressionLoss {
  double loss = 0.0;  // mean over rows of the squared error summed over dims
  Matrix dloss;       // d loss / d prediction
};

RegressionLoss squared_error(const Matrix& prediction, const Matrix& target);

struct LossResult {
  double loss = 0.0;
  numeric::ParamVector grad;
};

/// Epsilon-prediction loss with uniform timestep weighting.
LossResult diffusion_loss(const numeric::Mlp& net, const numeric::ParamVector& params,
                          const NoiseSchedule& schedule, const Matrix& x0, std::span<const int> cond,
                          numeric::Rng& rng);

/// Conditional OT flow-matching loss on the linear interpolation path.
LossResult flow_matching_loss(const numeric::Mlp& net, const numeric::ParamVector& params,
                              const Matrix& x_data, std::span<const int> cond, numeric::Rng& rng);

}  // namespace genunc::diffusion

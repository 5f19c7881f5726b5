#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "genunc/diffusion/checkpoint.hpp"
#include "genunc/diffusion/dataset.hpp"

namespace genunc::diffusion {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double ema_decay = 0.999;
  Objective objective = Objective::epsilon_prediction;
  std::uint64_t seed = 0;

  void validate(std::size_t dataset_size) const;
};

struct TrainResult {
  Checkpoint checkpoint;
  /// Entry 0 is the loss of the initial weights on a fixed evaluation draw;
  /// entry e (e >= 1) is the mean minibatch loss of epoch e.
  std::vector<double> loss_trace;
};

inline constexpr double kDivergenceLoss = 1e6;

/// Adam training with an EMA copy of the weights. Deterministic in `cfg.seed`.
/// Writes `epoch,loss` rows to `loss_log` when given.
TrainResult train(const TrainConfig& cfg, const numeric::MlpConfig& net, const NoiseSchedule& schedule,
                  const Dataset& data, const std::filesystem::path& loss_log = {});

/// Loss of `params` averaged over `repeats` fixed-seed draws of the whole dataset.
double evaluate_loss(const numeric::Mlp& net, const numeric::ParamVector& params, Objective objective,
                     const NoiseSchedule& schedule, const Dataset& data, std::uint64_t seed, int repeats = 1);

}  // namespace genunc::diffusion

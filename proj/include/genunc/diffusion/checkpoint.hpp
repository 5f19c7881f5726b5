#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "genunc/diffusion/schedule.hpp"
#include "genunc/numeric/mlp.hpp"
#include "genunc/numeric/param_vector.hpp"

namespace genunc::diffusion {

enum class Objective { epsilon_prediction, flow_velocity };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& name);

/// A trained denoiser: raw and EMA weights plus the schedule it was trained on.
/// Sampling and posterior fitting both use `sampling_params()` (the EMA weights).
struct Checkpoint {
  numeric::MlpConfig net;
  Objective objective = Objective::epsilon_prediction;
  NoiseSchedule schedule = NoiseSchedule::linear();
  numeric::ParamVector params;
  numeric::ParamVector ema;
  std::uint64_t seed = 0;
  std::uint64_t train_steps = 0;

  const numeric::ParamVector& sampling_params() const { return ema; }

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
  /// Content hash of the serialized checkpoint (hex).
  std::string hash() const;
};

}  // namespace genunc::diffusion

#pragma once

#include <filesystem>
#include <string>

#include "genunc/diffusion/dataset.hpp"
#include "genunc/diffusion/trainer.hpp"
#include "genunc/metrics/modes.hpp"
#include "genunc/numeric/mlp.hpp"

namespace testutil {

inline genunc::numeric::MlpConfig tiny_net(std::size_t hidden = 8) {
  genunc::numeric::MlpConfig c;
  c.hidden_dims = {hidden};
  c.time_embed_dim = 4;
  c.activation = genunc::numeric::Activation::tanh;
  return c;
}

inline genunc::diffusion::Dataset toy_data(std::size_t n, std::uint64_t seed) {
  auto spec = genunc::metrics::ModeSpec::grid();
  genunc::numeric::Rng rng(seed);
  auto [x, labels] = genunc::metrics::sample_modes(spec, n, rng);
  return genunc::diffusion::Dataset{x, labels};
}

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("genunc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Briefly trained unconditional checkpoint on the 25-mode grid.
inline genunc::diffusion::Checkpoint tiny_checkpoint(std::uint64_t seed, int epochs = 3,
                                                     genunc::diffusion::Objective objective =
                                                         genunc::diffusion::Objective::epsilon_prediction) {
  genunc::diffusion::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 64;
  cfg.objective = objective;
  cfg.seed = seed;
  auto data = toy_data(256, 7);
  data.cond.clear();
  return genunc::diffusion::train(cfg, tiny_net(), genunc::diffusion::NoiseSchedule::linear(), data).checkpoint;
}

}  // namespace testutil

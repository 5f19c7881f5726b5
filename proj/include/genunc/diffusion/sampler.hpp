#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genunc/diffusion/schedule.hpp"
#include "genunc/numeric/mlp.hpp"

namespace genunc::diffusion {

enum class SamplerKind { ddpm, ddim, flow_euler };

std::string to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(const std::string& name);

/// Time scale applied to flow-matching times in [0, 1] before the sinusoidal
/// embedding, so both objectives feed the network times of similar range.
inline constexpr double kFlowTimeScale = 1000.0;

/// A sampler and its timestep subsequence. For diffusion samplers
/// `timesteps` is strictly increasing within 1..T; the reverse pass visits
/// them from last to first. For flow-euler it is 1..steps and the ODE time
/// grid is i / steps.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::ddpm;
  std::vector<int> timesteps;
  double eta = 0.0;

  /// DDPM over all T steps (steps = 0) or an evenly respaced subsequence.
  static SamplerSpec ddpm(const NoiseSchedule& schedule, int steps = 0);
  static SamplerSpec ddim(const NoiseSchedule& schedule, int steps, double eta = 0.0);
  static SamplerSpec flow_euler(int steps = 50);

  int steps() const { return static_cast<int>(timesteps.size()); }
  /// True when the sampler consumes per-step noise.
  bool stochastic() const;
  void validate(const NoiseSchedule* schedule) const;
};

/// `steps` timesteps evenly spread over 1..T, always including 1 and T.
std::vector<int> respaced_timesteps(int total, int steps);

/// All randomness consumed by one trajectory. `noise_grid` lists the
/// timesteps (ascending) that the rows of `step_noises` belong to; row i is
/// the noise injected on the transition out of noise_grid[i].
struct SeedBundle {
  std::int64_t seed_id = 0;
  Vector initial_noise;
  std::vector<int> noise_grid;
  Matrix step_noises;

  bool has_step_noises() const { return step_noises.rows() > 0; }
};

/// Draws the bundle for `seed_id` from the stream fork(base_seed, seed_id).
/// Per-step noises are drawn on the grid of `noise_sampler` when it is stochastic.
SeedBundle make_seed_bundle(std::uint64_t base_seed, std::int64_t seed_id, std::size_t dim,
                            const SamplerSpec& noise_sampler);

/// Per-step noises for `target` derived from the bundle's grid. Each coarse
/// transition (tau_{i-1}, tau_i] receives the variance-weighted normalized
/// sum of the fine noises inside it, so a coarser DDPM run follows the same
/// Brownian path as the fine one. An identical grid returns the rows verbatim.
Matrix coupled_step_noises(const SeedBundle& bundle, const NoiseSchedule& schedule, const SamplerSpec& target);

/// Runs the reverse process g_theta for a batch of bundles. Rows of the result
/// are generated samples, in bundle order. `cond` is empty (unconditional) or
/// one label per bundle. Each bundle costs `sampler.steps()` network evaluations.
Matrix sample_batch(const numeric::Mlp& net, const numeric::ParamVector& params,
                    const NoiseSchedule* schedule, const SamplerSpec& sampler,
                    std::span<const SeedBundle> bundles, std::span<const int> cond = {});

Vector sample(const numeric::Mlp& net, const numeric::ParamVector& params, const NoiseSchedule* schedule,
              const SamplerSpec& sampler, const SeedBundle& bundle, std::optional<int> cond = std::nullopt);

}  // namespace genunc::diffusion

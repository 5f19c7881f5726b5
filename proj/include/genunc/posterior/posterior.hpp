#pragma once

#include <variant>
#include <vector>

#include "genunc/posterior/ensemble.hpp"
#include "genunc/posterior/laplace.hpp"

namespace genunc::posterior {

struct EnsemblePosterior {
  std::vector<numeric::ParamVector> members;  // sampling weights of each member
};

struct LaplacePosterior {
  numeric::ParamVector base;  // pretrained sampling weights
  LaplaceState state;
};

/// Approximate posterior q(theta | D) over denoiser weights.
using PosteriorSpec = std::variant<EnsemblePosterior, LaplacePosterior>;

PosteriorSpec make_ensemble_posterior(const Ensemble& ensemble);
/// Fails with HashMismatchError when `state` was not fitted on `pretrained`.
PosteriorSpec make_laplace_posterior(const diffusion::Checkpoint& pretrained, LaplaceState state);

void validate(const PosteriorSpec& posterior);

/// Ensemble: member `index` verbatim (rng unused). Laplace: one draw from `rng`.
numeric::ParamVector sample_weights(const PosteriorSpec& posterior, std::size_t index, numeric::Rng& rng);

/// M weight replicas theta_1..theta_M, drawn once and reused across seeds.
std::vector<numeric::ParamVector> draw_replicas(const PosteriorSpec& posterior, std::size_t M, std::uint64_t seed);

}  // namespace genunc::posterior

#include "genunc/posterior/posterior.hpp"

#include "genunc/error.hpp"

namespace genunc::posterior {

PosteriorSpec make_ensemble_posterior(const Ensemble& ensemble) {
  EnsemblePosterior p;
  for (const auto& m : ensemble.members) p.members.push_back(m.sampling_params());
  PosteriorSpec spec = std::move(p);
  validate(spec);
  return spec;
}

PosteriorSpec make_laplace_posterior(const diffusion::Checkpoint& pretrained, LaplaceState state) {
  const auto hash = pretrained.hash();
  if (state.source_hash != hash)
    throw HashMismatchError("laplace posterior was fitted on checkpoint " + state.source_hash + ", not " + hash);
  PosteriorSpec spec = LaplacePosterior{pretrained.sampling_params(), std::move(state)};
  validate(spec);
  return spec;
}

void validate(const PosteriorSpec& posterior) {
  if (const auto* e = std::get_if<EnsemblePosterior>(&posterior)) {
    if (e->members.size() < 2) throw ConfigError("ensemble posterior needs at least two members");
    for (const auto& m : e->members)
      if (!m.same_layout(e->members.front())) throw DimensionError("ensemble members have different layouts");
  } else {
    const auto& l = std::get<LaplacePosterior>(posterior);
    l.state.validate();
    if (l.state.offset + static_cast<std::size_t>(l.state.mean.size()) != l.base.size())
      throw DimensionError("laplace slice must cover the tail (last layer) of the parameter vector");
  }
}

numeric::ParamVector sample_weights(const PosteriorSpec& posterior, std::size_t index, numeric::Rng& rng) {
  if (const auto* e = std::get_if<EnsemblePosterior>(&posterior)) {
    if (index >= e->members.size())
      throw ConfigError("ensemble member " + std::to_string(index) + " out of range (" +
                        std::to_string(e->members.size()) + " members)");
    return e->members[index];
  }
  const auto& l = std::get<LaplacePosterior>(posterior);
  return l.state.sample(l.base, rng);
}

std::vector<numeric::ParamVector> draw_replicas(const PosteriorSpec& posterior, std::size_t M, std::uint64_t seed) {
  if (M == 0) throw ConfigError("posterior: at least one replica is required");
  numeric::Rng rng(seed);
  std::vector<numeric::ParamVector> out;
  out.reserve(M);
  for (std::size_t m = 0; m < M; ++m) out.push_back(sample_weights(posterior, m, rng));
  return out;
}

}  // namespace genunc::posterior

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genunc/diffusion/checkpoint.hpp"
#include "genunc/diffusion/sampler.hpp"
#include "genunc/posterior/posterior.hpp"
#include "genunc/uncertainty/feature_map.hpp"
#include "genunc/uncertainty/predictive.hpp"

namespace genunc::uncertainty {

enum class ScoreMode {
  automatic,               // entropy for M >= 2, distance for M = 1
  entropy,                 // entropy of the moment-matched predictive
  distance_to_pretrained,  // mean_m ||e_m - e_0||^2
};

std::string to_string(ScoreMode m);
ScoreMode score_mode_from_string(const std::string& name);

struct ScoringOptions {
  std::size_t replicas = 5;  // M
  double sigma2 = 1e-3;
  /// Use {e_0, ..., e_M} instead of {e_1, ..., e_M} for the predictive moments.
  bool include_pretrained = false;
  ScoreMode mode = ScoreMode::automatic;
  /// Seed for drawing theta_1..theta_M (Laplace posteriors).
  std::uint64_t replica_seed = 0;
  std::size_t batch_size = 256;
  std::size_t threads = 1;

  ScoreMode resolved_mode() const;
  void validate() const;
};

struct UncertaintyRecord {
  std::int64_t seed_id = 0;
  std::optional<int> cond;
  Vector sample;     // x_hat_0 from the pretrained weights
  Matrix replicas;   // M x d, x_hat_m from theta_m
  Matrix features;   // (M + 1) x k, row 0 = e_0
  double entropy = 0.0;
  double score = 0.0;  // ranking score (entropy or distance, per ScoreMode)
};

struct NfeCount {
  std::uint64_t generation = 0;  // samples * T_generation
  std::uint64_t scoring = 0;     // samples * M * T_score
};

/// Batch scorer with the weight replicas fixed up front, so every seed is
/// scored against the same theta_1..theta_M.
class UncertaintyScorer {
 public:
  UncertaintyScorer(const diffusion::Checkpoint& pretrained, std::vector<numeric::ParamVector> replica_weights,
                    diffusion::SamplerSpec generation, diffusion::SamplerSpec replica_sampler, FeatureMap features,
                    ScoringOptions options);

  /// Records come back sorted by seed id whatever the input order.
  std::vector<UncertaintyRecord> score(std::span<const diffusion::SeedBundle> bundles,
                                       std::span<const int> cond = {}, NfeCount* nfe = nullptr) const;

  const ScoringOptions& options() const { return options_; }

 private:
  void score_block(std::span<const diffusion::SeedBundle* const> bundles, std::span<const int> cond,
                   std::span<UncertaintyRecord> out) const;

  const diffusion::Checkpoint& pretrained_;
  numeric::Mlp net_;
  std::vector<numeric::ParamVector> replica_weights_;
  diffusion::SamplerSpec generation_;
  diffusion::SamplerSpec replica_sampler_;
  FeatureMap features_;
  ScoringOptions options_;
};

/// Scores one seed: draws theta_1..theta_M from `posterior`, generates
/// x_hat_0 with the pretrained weights and x_hat_m with each theta_m from the
/// same bundle, and reduces the features to an entropy.
UncertaintyRecord score_seed(const diffusion::SeedBundle& bundle, const diffusion::Checkpoint& pretrained,
                             const posterior::PosteriorSpec& posterior, const diffusion::SamplerSpec& generation,
                             const diffusion::SamplerSpec& replica_sampler, const FeatureMap& features,
                             const ScoringOptions& options, std::optional<int> cond = std::nullopt,
                             NfeCount* nfe = nullptr);

std::vector<UncertaintyRecord> score_batch(std::span<const diffusion::SeedBundle> bundles,
                                           const diffusion::Checkpoint& pretrained,
                                           const posterior::PosteriorSpec& posterior,
                                           const diffusion::SamplerSpec& generation,
                                           const diffusion::SamplerSpec& replica_sampler, const FeatureMap& features,
                                           const ScoringOptions& options, std::span<const int> cond = {},
                                           NfeCount* nfe = nullptr);

/// Mean entropy per condition label; unconditional records are keyed -1.
std::map<int, double> aggregate_by_condition(std::span<const UncertaintyRecord> records);

}  // namespace genunc::uncertainty

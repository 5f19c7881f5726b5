#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "genunc/diffusion/sampler.hpp"
#include "genunc/diffusion/trainer.hpp"
#include "genunc/posterior/laplace.hpp"
#include "genunc/uncertainty/feature_map.hpp"
#include "genunc/uncertainty/scoring.hpp"

namespace genunc::pipeline {

inline constexpr int kConfigVersion = 1;

enum class PosteriorKind { ensemble, laplace };

std::string to_string(PosteriorKind k);
PosteriorKind posterior_kind_from_string(const std::string& name);

/// Every knob of one experiment. Serialized as `key = value` lines; the
/// file must declare `config_version` and unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "genunc-out";
  std::size_t threads = 1;

  // dataset
  std::string dataset_source = "modes";  // modes | csv
  std::filesystem::path dataset_path;
  std::size_t dataset_size = 20000;
  std::size_t reference_size = 10000;
  int modes_per_side = 5;
  double mode_span = 2.0;
  double mode_std = 0.05;
  double hallucination_radius = 3.0;

  // model and training
  std::vector<std::size_t> hidden = {64, 64, 64};
  numeric::Activation activation = numeric::Activation::silu;
  std::size_t time_embed_dim = 32;
  bool conditional = false;
  diffusion::ScheduleKind schedule_kind = diffusion::ScheduleKind::linear;
  int schedule_steps = 1000;
  diffusion::Objective objective = diffusion::Objective::epsilon_prediction;
  int epochs = 400;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double ema_decay = 0.999;

  // posterior
  PosteriorKind posterior = PosteriorKind::ensemble;
  std::size_t ensemble_members = 5;
  double laplace_prior_precision = 1.0;
  double laplace_sigma = 1.0;
  double laplace_fraction = 1.0;

  // generation
  diffusion::SamplerKind sampler = diffusion::SamplerKind::ddpm;
  int sampler_steps = 200;  // 0 = every schedule step
  double sampler_eta = 0.0;
  std::size_t sample_count = 10000;
  std::uint64_t samples_seed = 0;  // varies the generation noise only

  // scoring
  std::size_t replicas = 5;
  std::string score_sampler = "match";  // match | ddpm | ddim | flow-euler
  int score_steps = 0;                  // 0 = same as generation
  double sigma2 = 1e-3;
  uncertainty::ScoreMode score_mode = uncertainty::ScoreMode::automatic;
  uncertainty::FeatureKind features = uncertainty::FeatureKind::identity;
  std::size_t feature_dim = 2;
  std::filesystem::path embedding_path;
  bool include_pretrained = false;
  std::size_t batch = 256;

  // filtering and evaluation
  std::vector<std::size_t> n_grid = {5000};
  std::vector<std::string> filter_scores = {"entropy", "realism", "rarity", "entropy+realism"};
  std::size_t k = 3;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// All keys in canonical order with canonical values.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;
  /// Hash over every key except output_dir and threads, which do not change results.
  std::string hash() const;

  static ExperimentConfig parse(const std::string& text, const std::string& origin = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Applies one `key=value` override.
  void set(const std::string& key, const std::string& value);

  numeric::MlpConfig net_config() const;
  diffusion::NoiseSchedule schedule() const;
  diffusion::TrainConfig train_config(std::uint64_t seed) const;
  diffusion::SamplerSpec generation_sampler(const diffusion::NoiseSchedule& schedule) const;
  diffusion::SamplerSpec replica_sampler(const diffusion::NoiseSchedule& schedule) const;
  uncertainty::ScoringOptions scoring_options(std::uint64_t replica_seed) const;
  std::size_t mode_count() const { return static_cast<std::size_t>(modes_per_side * modes_per_side); }
};

}  // namespace genunc::pipeline

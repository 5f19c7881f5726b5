#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genunc/diffusion/trainer.hpp"

namespace genunc::posterior {

struct Ensemble {
  std::vector<diffusion::Checkpoint> members;
  std::vector<std::uint64_t> seeds;
};

/// Seed of ensemble member `index`, derived from `base_seed`.
std::uint64_t member_seed(std::uint64_t base_seed, std::size_t index);

/// M independently seeded trainings of the same configuration.
/// `loss_log_dir`, when set, receives member_<i>_loss.csv traces.
Ensemble train_ensemble(const diffusion::TrainConfig& cfg, const numeric::MlpConfig& net,
                        const diffusion::NoiseSchedule& schedule, const diffusion::Dataset& data, std::size_t members,
                        std::uint64_t base_seed, const std::filesystem::path& loss_log_dir = {});

struct EnsembleManifestEntry {
  std::filesystem::path checkpoint;
  std::uint64_t seed = 0;
  std::string hash;
};

/// JSON list of {checkpoint, seed, hash}. Paths are stored relative to the manifest.
void save_ensemble_manifest(const std::filesystem::path& path, const std::vector<EnsembleManifestEntry>& entries);
std::vector<EnsembleManifestEntry> load_ensemble_manifest(const std::filesystem::path& path);
/// Loads every member and checks its hash against the manifest.
Ensemble load_ensemble(const std::filesystem::path& manifest_path);

}  // namespace genunc::posterior

#include "genunc/posterior/ensemble.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "genunc/error.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::posterior {

std::uint64_t member_seed(std::uint64_t base_seed, std::size_t index) {
  return numeric::Rng(base_seed).fork(0xE05E0000ULL + index).next_u64();
}

Ensemble train_ensemble(const diffusion::TrainConfig& cfg, const numeric::MlpConfig& net,
                        const diffusion::NoiseSchedule& schedule, const diffusion::Dataset& data, std::size_t members,
                        std::uint64_t base_seed, const std::filesystem::path& loss_log_dir) {
  if (members < 2) throw ConfigError("ensemble: at least two members are required");
  Ensemble out;
  for (std::size_t i = 0; i < members; ++i) {
    diffusion::TrainConfig member_cfg = cfg;
    member_cfg.seed = member_seed(base_seed, i);
    std::filesystem::path log;
    if (!loss_log_dir.empty()) log = loss_log_dir / ("member_" + std::to_string(i) + "_loss.csv");
    try {
      out.members.push_back(diffusion::train(member_cfg, net, schedule, data, log).checkpoint);
    } catch (const NumericError& e) {
      throw NumericError("ensemble member " + std::to_string(i) + ": " + e.what());
    }
    out.seeds.push_back(member_cfg.seed);
  }
  return out;
}

void save_ensemble_manifest(const std::filesystem::path& path, const std::vector<EnsembleManifestEntry>& entries) {
  auto list = nlohmann::json::array();
  for (const auto& e : entries) {
    const auto rel = std::filesystem::absolute(e.checkpoint).lexically_proximate(std::filesystem::absolute(path).parent_path());
    list.push_back({{"checkpoint", rel.generic_string()}, {"seed", e.seed}, {"hash", e.hash}});
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << nlohmann::json{{"kind", "ensemble"}, {"format_version", 1}, {"members", list}}.dump(2) << '\n';
}

std::vector<EnsembleManifestEntry> load_ensemble_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "ensemble") throw IoError(path.string() + ": not an ensemble manifest");
  std::vector<EnsembleManifestEntry> out;
  for (const auto& m : j.at("members"))
    out.push_back({path.parent_path() / m.at("checkpoint").get<std::string>(), m.at("seed").get<std::uint64_t>(),
                   m.at("hash").get<std::string>()});
  return out;
}

Ensemble load_ensemble(const std::filesystem::path& manifest_path) {
  Ensemble out;
  for (const auto& e : load_ensemble_manifest(manifest_path)) {
    auto ck = diffusion::Checkpoint::load(e.checkpoint);
    if (ck.hash() != e.hash)
      throw HashMismatchError(e.checkpoint.string() + ": hash " + ck.hash() + " differs from manifest " + e.hash);
    out.members.push_back(std::move(ck));
    out.seeds.push_back(e.seed);
  }
  return out;
}

}  // namespace genunc::posterior

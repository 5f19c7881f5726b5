#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genunc/pipeline/config.hpp"

namespace genunc::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct StageRecord {
  std::string name;
  std::string key;
  bool cache_hit = false;
  double seconds = 0.0;
  std::string status = "ok";  // ok | failed
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<StageRecord> stages;
  std::map<std::string, std::string> artifacts;  // name -> path relative to the output dir
  std::uint64_t nfe_generation = 0;
  std::uint64_t nfe_scoring = 0;
  std::uint64_t scored_seeds = 0;
  double wall_seconds = 0.0;

  std::size_t cache_hits() const;
  /// Scoring NFEs per seed, i.e. M * T-score.
  double scoring_nfe_per_seed() const;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

/// Staged experiment in one output directory. Each stage writes into its own
/// subdirectory with a stage.json holding the stage key (a hash of the
/// upstream key and the config entries it reads) and the hashes of its
/// outputs. A stage whose key matches is reused; a matching key with altered
/// outputs raises HashMismatchError.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }
  const RunManifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

  void gen_dataset();
  /// Pretrained checkpoint (and ensemble members for an ensemble posterior).
  void train();
  void fit_posterior();
  void score();
  void sample_metrics();
  void filter();
  void eval();
  void plot();
  void run();

  void write_manifest() const;

  /// Directory of stage `name` (dataset, pretrained, ensemble, laplace, score,
  /// metrics, filter, eval, plots) for this configuration.
  std::filesystem::path stage_path(const std::string& name) const;
  std::filesystem::path train_csv() const;
  std::filesystem::path reference_csv() const;
  std::filesystem::path pretrained_path() const;
  std::filesystem::path ensemble_manifest() const;
  std::filesystem::path laplace_path() const;
  std::filesystem::path records_csv() const;
  std::filesystem::path records_sidecar() const;
  std::filesystem::path entropy_csv() const;
  std::filesystem::path filter_path(const std::string& score, std::size_t n) const;
  std::filesystem::path report_path(const std::string& score, std::size_t n, const std::string& subset) const;
  std::filesystem::path plots_dir() const;

 private:
  struct StageOutputs {
    std::vector<std::filesystem::path> files;
    nlohmann::json extra = nlohmann::json::object();
  };

  std::string stage_key(const std::string& name, const std::string& upstream, const std::vector<std::string>& prefixes,
                        const std::string& salt = {}) const;
  /// Runs `body` unless the cached stage `name` matches `key`. Returns the stage's extra data.
  nlohmann::json run_stage(const std::string& name, const std::string& key,
                           const std::function<StageOutputs()>& body);

  void train_members();

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
  RunManifest manifest_;
  std::map<std::string, std::string> keys_;
  std::map<std::string, nlohmann::json> done_;  // stages finished in this process
};

/// Reads the `seed_id,subset` file written by the filter stage.
void read_filter_file(const std::filesystem::path& path, std::vector<std::int64_t>& kept,
                      std::vector<std::int64_t>& random);

}  // namespace genunc::pipeline

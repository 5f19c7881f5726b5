#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "genunc/uncertainty/scoring.hpp"

namespace genunc::uncertainty {

/// `seed_id,cond,entropy`; cond is empty for unconditional records.
void write_records_csv(const std::filesystem::path& path, std::span<const UncertaintyRecord> records);

/// Binary sidecar holding samples, replicas and features of every record.
void write_records_sidecar(const std::filesystem::path& path, std::span<const UncertaintyRecord> records,
                           const nlohmann::json& meta = nlohmann::json::object());
std::vector<UncertaintyRecord> read_records_sidecar(const std::filesystem::path& path);

struct ScoreColumn {
  std::vector<std::int64_t> seed_ids;
  std::vector<double> values;
};

/// `seed_id,score`, values with 17 significant digits (inf allowed).
void write_scores_csv(const std::filesystem::path& path, const ScoreColumn& scores);
ScoreColumn read_scores_csv(const std::filesystem::path& path);

}  // namespace genunc::uncertainty

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genunc/metrics/modes.hpp"
#include "genunc/metrics/ranking.hpp"

namespace genunc::metrics {

struct MetricReport {
  std::string label;
  std::size_t n = 0;
  double fid = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double hallucination_rate = 0.0;
  std::vector<double> mode_coverage;
  std::vector<std::int64_t> seed_ids;
  std::vector<double> realism;
  std::vector<double> rarity;
  SpearmanMatrix spearman;

  /// Key-value text with `[section]` CSV blocks closed by `[end]`.
  void save(const std::filesystem::path& path) const;
  static MetricReport load(const std::filesystem::path& path);
};

struct EvalOptions {
  std::size_t k = 3;
  std::size_t threads = 1;
};

class ManifoldIndex;

/// Distribution- and sample-level metrics of `samples` against `reference`
/// (identity features). `reference_index` must be built on `reference`.
MetricReport evaluate_set(const std::string& label, const std::vector<std::int64_t>& seed_ids, const Matrix& samples,
                          const Matrix& reference, const ManifoldIndex& reference_index, const ModeSpec* modes,
                          const EvalOptions& opts);

}  // namespace genunc::metrics

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genunc/numeric/rng.hpp"

namespace genunc::metrics {

/// Which end of a score is "best" when filtering.
enum class Direction { lower_is_better, higher_is_better };

/// Ranks with ties averaged (1-based). +inf sorts last.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Pearson correlation of average ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct SpearmanMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // symmetric, unit diagonal
};

SpearmanMatrix spearman_matrix(const std::vector<std::string>& names, const std::vector<std::vector<double>>& scores);

/// 1-based best-first rank of each element; ties go to the smaller seed id.
std::vector<std::size_t> rank_best_first(const std::vector<std::int64_t>& seed_ids, const std::vector<double>& values,
                                         Direction direction);

struct CombinedRanking {
  std::vector<std::int64_t> order;  // seed ids, best first
  std::vector<std::size_t> rank;    // combined 1-based rank of each input element
};

/// Ranks every score best-first, sums the ranks and re-ranks by the sum
/// (ties by seed id).
CombinedRanking combine_ranks(const std::vector<std::int64_t>& seed_ids, const std::vector<std::vector<double>>& scores,
                              const std::vector<Direction>& directions);

struct FilterResult {
  std::vector<std::int64_t> kept;    // the n best, sorted by seed id
  std::vector<std::int64_t> random;  // uniform n-subset baseline, sorted by seed id
};

/// Keeps the n best seeds by `values` and draws a same-size random baseline from `rng`.
FilterResult filter_by_score(const std::vector<std::int64_t>& seed_ids, const std::vector<double>& values,
                             Direction direction, std::size_t n, numeric::Rng& rng);

}  // namespace genunc::metrics

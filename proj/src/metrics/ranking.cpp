#include "genunc/metrics/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genunc/error.hpp"

namespace genunc::metrics {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  for (double v : values)
    if (std::isnan(v)) throw NumericError("cannot rank NaN scores");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("spearman inputs differ in length");
  if (a.size() < 2) throw DimensionError("spearman needs at least two values");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SpearmanMatrix spearman_matrix(const std::vector<std::string>& names, const std::vector<std::vector<double>>& scores) {
  if (names.size() != scores.size()) throw DimensionError("spearman matrix needs one name per score");
  SpearmanMatrix out;
  out.names = names;
  const std::size_t k = names.size();
  out.values.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) out.values[i][j] = out.values[j][i] = spearman(scores[i], scores[j]);
  return out;
}

namespace {

std::vector<std::size_t> best_first_order(const std::vector<std::int64_t>& ids, const std::vector<double>& keys) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return ids[a] < ids[b];
  });
  return order;
}

std::vector<double> oriented(const std::vector<double>& values, Direction direction) {
  std::vector<double> keys(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) throw NumericError("cannot rank NaN scores");
    keys[i] = direction == Direction::lower_is_better ? values[i] : -values[i];
  }
  return keys;
}

}  // namespace

std::vector<std::size_t> rank_best_first(const std::vector<std::int64_t>& seed_ids, const std::vector<double>& values,
                                         Direction direction) {
  if (seed_ids.size() != values.size()) throw DimensionError("ranking needs one score per seed id");
  auto order = best_first_order(seed_ids, oriented(values, direction));
  std::vector<std::size_t> rank(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

CombinedRanking combine_ranks(const std::vector<std::int64_t>& seed_ids, const std::vector<std::vector<double>>& scores,
                              const std::vector<Direction>& directions) {
  if (scores.empty()) throw ConfigError("combine_ranks needs at least one score");
  if (scores.size() != directions.size()) throw DimensionError("combine_ranks needs one direction per score");
  std::vector<double> sum(seed_ids.size(), 0.0);
  for (std::size_t s = 0; s < scores.size(); ++s) {
    auto r = rank_best_first(seed_ids, scores[s], directions[s]);
    for (std::size_t i = 0; i < r.size(); ++i) sum[i] += static_cast<double>(r[i]);
  }
  auto order = best_first_order(seed_ids, sum);
  CombinedRanking out;
  out.rank.resize(seed_ids.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.order.push_back(seed_ids[order[r]]);
    out.rank[order[r]] = r + 1;
  }
  return out;
}

FilterResult filter_by_score(const std::vector<std::int64_t>& seed_ids, const std::vector<double>& values,
                             Direction direction, std::size_t n, numeric::Rng& rng) {
  if (seed_ids.size() != values.size()) throw DimensionError("filter needs one score per seed id");
  if (n > seed_ids.size())
    throw ConfigError("cannot keep " + std::to_string(n) + " of " + std::to_string(seed_ids.size()) + " samples");
  auto order = best_first_order(seed_ids, oriented(values, direction));
  FilterResult out;
  for (std::size_t r = 0; r < n; ++r) out.kept.push_back(seed_ids[order[r]]);
  std::sort(out.kept.begin(), out.kept.end());

  std::vector<std::int64_t> pool = seed_ids;
  std::sort(pool.begin(), pool.end());
  rng.shuffle(pool);
  out.random.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(out.random.begin(), out.random.end());
  return out;
}

}  // namespace genunc::metrics

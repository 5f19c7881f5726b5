#include "genunc/uncertainty/scoring.hpp"

#include <algorithm>
#include <numeric>

#include "genunc/error.hpp"
#include "genunc/numeric/parallel.hpp"

namespace genunc::uncertainty {

std::string to_string(ScoreMode m) {
  switch (m) {
    case ScoreMode::automatic: return "auto";
    case ScoreMode::entropy: return "entropy";
    case ScoreMode::distance_to_pretrained: return "distance";
  }
  return "?";
}

ScoreMode score_mode_from_string(const std::string& name) {
  if (name == "auto") return ScoreMode::automatic;
  if (name == "entropy") return ScoreMode::entropy;
  if (name == "distance") return ScoreMode::distance_to_pretrained;
  throw ConfigError("unknown score mode '" + name + "'");
}

ScoreMode ScoringOptions::resolved_mode() const {
  if (mode != ScoreMode::automatic) return mode;
  return replicas == 1 ? ScoreMode::distance_to_pretrained : ScoreMode::entropy;
}

void ScoringOptions::validate() const {
  if (replicas == 0) throw ConfigError("scoring: M must be at least 1");
  if (!(sigma2 > 0)) throw ConfigError("scoring: sigma^2 must be positive");
  if (batch_size == 0) throw ConfigError("scoring: batch size must be positive");
}

UncertaintyScorer::UncertaintyScorer(const diffusion::Checkpoint& pretrained,
                                     std::vector<numeric::ParamVector> replica_weights,
                                     diffusion::SamplerSpec generation, diffusion::SamplerSpec replica_sampler,
                                     FeatureMap features, ScoringOptions options)
    : pretrained_(pretrained),
      net_(pretrained.net),
      replica_weights_(std::move(replica_weights)),
      generation_(std::move(generation)),
      replica_sampler_(std::move(replica_sampler)),
      features_(std::move(features)),
      options_(options) {
  options_.validate();
  if (replica_weights_.size() != options_.replicas)
    throw ConfigError("scoring: expected " + std::to_string(options_.replicas) + " weight replicas, got " +
                      std::to_string(replica_weights_.size()));
  for (const auto& w : replica_weights_)
    if (!w.same_layout(pretrained_.sampling_params()))
      throw DimensionError("scoring: replica weights do not match the pretrained network");
  generation_.validate(&pretrained_.schedule);
  replica_sampler_.validate(&pretrained_.schedule);
}

void UncertaintyScorer::score_block(std::span<const diffusion::SeedBundle* const> bundles, std::span<const int> cond,
                                    std::span<UncertaintyRecord> out) const {
  std::vector<diffusion::SeedBundle> local;
  local.reserve(bundles.size());
  for (const auto* b : bundles) local.push_back(*b);
  const auto* schedule = &pretrained_.schedule;
  const std::size_t M = options_.replicas;
  const std::size_t n = local.size();

  auto ids_for = [&](std::size_t m) {
    std::vector<std::string> ids;
    if (features_.kind() == FeatureKind::embedding_file) {
      ids.reserve(n);
      for (const auto& b : local) ids.push_back(sample_id(b.seed_id, m));
    }
    return ids;
  };

  const Matrix x0 = diffusion::sample_batch(net_, pretrained_.sampling_params(), schedule, generation_, local, cond);
  const Matrix e0 = features_.apply(x0, ids_for(0));
  std::vector<Matrix> xs(M), es(M);
  for (std::size_t m = 0; m < M; ++m) {
    xs[m] = diffusion::sample_batch(net_, replica_weights_[m], schedule, replica_sampler_, local, cond);
    es[m] = features_.apply(xs[m], ids_for(m + 1));
  }

  const auto d = x0.cols();
  const auto k = e0.cols();
  const ScoreMode mode = options_.resolved_mode();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    UncertaintyRecord& r = out[i];
    r.seed_id = local[i].seed_id;
    if (!cond.empty()) r.cond = cond[i];
    r.sample = x0.row(row).transpose();
    r.replicas.resize(static_cast<Eigen::Index>(M), d);
    r.features.resize(static_cast<Eigen::Index>(M + 1), k);
    r.features.row(0) = e0.row(row);
    for (std::size_t m = 0; m < M; ++m) {
      r.replicas.row(static_cast<Eigen::Index>(m)) = xs[m].row(row);
      r.features.row(static_cast<Eigen::Index>(m + 1)) = es[m].row(row);
    }
    const Matrix stat = options_.include_pretrained ? r.features : Matrix(r.features.bottomRows(static_cast<Eigen::Index>(M)));
    r.entropy = gaussian_entropy(moment_match(stat, options_.sigma2));
    if (!std::isfinite(r.entropy))
      throw NumericError("scoring: non-finite entropy for seed " + std::to_string(r.seed_id));
    if (mode == ScoreMode::entropy) {
      r.score = r.entropy;
    } else {
      double dist = 0.0;
      for (std::size_t m = 1; m <= M; ++m)
        dist += (r.features.row(static_cast<Eigen::Index>(m)) - r.features.row(0)).squaredNorm();
      r.score = dist / static_cast<double>(M);
    }
  }
}

std::vector<UncertaintyRecord> UncertaintyScorer::score(std::span<const diffusion::SeedBundle> bundles,
                                                        std::span<const int> cond, NfeCount* nfe) const {
  if (!cond.empty() && cond.size() != bundles.size())
    throw ConfigError("scoring: condition list length differs from the seed list");
  // Canonical order by seed id: blocks, and therefore results, do not depend
  // on the caller's ordering or on the thread count.
  std::vector<std::size_t> order(bundles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bundles[a].seed_id < bundles[b].seed_id; });
  std::vector<const diffusion::SeedBundle*> sorted;
  std::vector<int> sorted_cond;
  for (auto i : order) {
    sorted.push_back(&bundles[i]);
    if (!cond.empty()) sorted_cond.push_back(cond[i]);
  }
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i]->seed_id == sorted[i - 1]->seed_id)
      throw ConfigError("scoring: duplicate seed id " + std::to_string(sorted[i]->seed_id));

  std::vector<UncertaintyRecord> records(sorted.size());
  const std::size_t bs = options_.batch_size;
  const std::size_t blocks = (sorted.size() + bs - 1) / bs;
  numeric::parallel_for(blocks, options_.threads, [&](std::size_t blk) {
    const std::size_t start = blk * bs;
    const std::size_t len = std::min(bs, sorted.size() - start);
    std::span<const int> c = sorted_cond.empty() ? std::span<const int>() : std::span<const int>(sorted_cond).subspan(start, len);
    try {
      score_block(std::span(sorted).subspan(start, len), c, std::span(records).subspan(start, len));
    } catch (const Error& e) {
      throw NumericError("scoring seeds " + std::to_string(sorted[start]->seed_id) + ".." +
                         std::to_string(sorted[start + len - 1]->seed_id) + ": " + e.what());
    }
  });
  if (nfe) {
    const auto count = static_cast<std::uint64_t>(sorted.size());
    nfe->generation += count * static_cast<std::uint64_t>(generation_.steps());
    nfe->scoring += count * options_.replicas * static_cast<std::uint64_t>(replica_sampler_.steps());
  }
  return records;
}

UncertaintyRecord score_seed(const diffusion::SeedBundle& bundle, const diffusion::Checkpoint& pretrained,
                             const posterior::PosteriorSpec& posterior, const diffusion::SamplerSpec& generation,
                             const diffusion::SamplerSpec& replica_sampler, const FeatureMap& features,
                             const ScoringOptions& options, std::optional<int> cond, NfeCount* nfe) {
  const int c[1] = {cond.value_or(0)};
  auto records = score_batch(std::span(&bundle, 1), pretrained, posterior, generation, replica_sampler, features,
                             options, cond ? std::span<const int>(c, 1) : std::span<const int>(), nfe);
  return std::move(records.front());
}

std::vector<UncertaintyRecord> score_batch(std::span<const diffusion::SeedBundle> bundles,
                                           const diffusion::Checkpoint& pretrained,
                                           const posterior::PosteriorSpec& posterior,
                                           const diffusion::SamplerSpec& generation,
                                           const diffusion::SamplerSpec& replica_sampler, const FeatureMap& features,
                                           const ScoringOptions& options, std::span<const int> cond, NfeCount* nfe) {
  options.validate();
  if (const auto* l = std::get_if<posterior::LaplacePosterior>(&posterior)) {
    if (l->state.source_hash != pretrained.hash())
      throw HashMismatchError("scoring: laplace posterior was fitted on checkpoint " + l->state.source_hash +
                              ", not " + pretrained.hash());
  }
  UncertaintyScorer scorer(pretrained, posterior::draw_replicas(posterior, options.replicas, options.replica_seed),
                           generation, replica_sampler, features, options);
  return scorer.score(bundles, cond, nfe);
}

std::map<int, double> aggregate_by_condition(std::span<const UncertaintyRecord> records) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    auto& [sum, n] = acc[r.cond.value_or(-1)];
    sum += r.entropy;
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [c, sn] : acc) out[c] = sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace genunc::uncertainty

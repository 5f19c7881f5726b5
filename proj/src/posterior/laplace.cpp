#include "genunc/posterior/laplace.hpp"

#include <cmath>
#include <numeric>

#include "genunc/diffusion/objectives.hpp"
#include "genunc/error.hpp"
#include "genunc/numeric/container.hpp"
#include "genunc/numeric/hash.hpp"

namespace genunc::posterior {

FisherAccumulator::FisherAccumulator(std::size_t length)
    : sum_sq_(Vector::Zero(static_cast<Eigen::Index>(length))) {}

void FisherAccumulator::add(const Matrix& per_example_grads) {
  if (per_example_grads.cols() != sum_sq_.size())
    throw DimensionError("fisher: gradient rows have the wrong length");
  for (Eigen::Index r = 0; r < per_example_grads.rows(); ++r)
    sum_sq_ += per_example_grads.row(r).transpose().cwiseAbs2();
  count_ += static_cast<std::size_t>(per_example_grads.rows());
}

void FisherAccumulator::merge(const FisherAccumulator& other) {
  if (other.sum_sq_.size() != sum_sq_.size()) throw DimensionError("fisher: merging accumulators of different length");
  sum_sq_ += other.sum_sq_;
  count_ += other.count_;
}

LaplaceState LaplaceState::from_fisher(std::size_t offset, std::vector<std::string> layer_names, Vector mean,
                                       Vector fisher_diag, double prior_precision, double sigma) {
  if (!(prior_precision > 0)) throw ConfigError("laplace: prior precision must be positive");
  if (!(sigma > 0)) throw ConfigError("laplace: observation noise must be positive");
  LaplaceState s;
  s.offset = offset;
  s.layer_names = std::move(layer_names);
  s.mean = std::move(mean);
  s.fisher_diag = std::move(fisher_diag);
  s.prior_precision = prior_precision;
  s.sigma = sigma;
  s.posterior_variance = (sigma * sigma) / (s.fisher_diag.array() + prior_precision);
  s.validate();
  return s;
}

void LaplaceState::validate() const {
  if (mean.size() != fisher_diag.size() || mean.size() != posterior_variance.size())
    throw DimensionError("laplace: mean, fisher and variance lengths differ");
  if ((fisher_diag.array() < 0.0).any() || !fisher_diag.allFinite())
    throw NumericError("laplace: fisher diagonal must be finite and non-negative");
  if (!posterior_variance.allFinite() || (posterior_variance.array() < 0.0).any())
    throw NumericError("laplace: posterior variance must be finite and non-negative");
}

numeric::ParamVector LaplaceState::sample(const numeric::ParamVector& base, numeric::Rng& rng) const {
  if (offset + static_cast<std::size_t>(mean.size()) > base.size())
    throw DimensionError("laplace: last-layer slice exceeds the parameter vector");
  numeric::ParamVector out = base;
  auto slice = out.values().segment(static_cast<Eigen::Index>(offset), mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) slice[i] = mean[i] + std::sqrt(posterior_variance[i]) * rng.normal();
  return out;
}

namespace {
std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

void LaplaceState::save(const std::filesystem::path& path) const {
  numeric::Container c;
  c.kind = "laplace";
  c.meta = {{"offset", offset},           {"layer_names", layer_names}, {"prior_precision", prior_precision},
            {"sigma", sigma},             {"source_hash", source_hash}, {"fit_count", fit_count}};
  c.add("mean", to_std(mean));
  c.add("fisher_diag", to_std(fisher_diag));
  c.add("posterior_variance", to_std(posterior_variance));
  c.save(path);
}

LaplaceState LaplaceState::load(const std::filesystem::path& path, const std::string& expected_source_hash) {
  auto c = numeric::Container::load(path, "laplace");
  LaplaceState s;
  s.offset = c.meta.at("offset").get<std::size_t>();
  s.layer_names = c.meta.at("layer_names").get<std::vector<std::string>>();
  s.prior_precision = c.meta.at("prior_precision").get<double>();
  s.sigma = c.meta.at("sigma").get<double>();
  s.source_hash = c.meta.at("source_hash").get<std::string>();
  s.fit_count = c.meta.at("fit_count").get<std::size_t>();
  s.mean = from_std(c.array("mean"));
  s.fisher_diag = from_std(c.array("fisher_diag"));
  s.posterior_variance = from_std(c.array("posterior_variance"));
  s.validate();
  if (!expected_source_hash.empty() && s.source_hash != expected_source_hash)
    throw HashMismatchError(path.string() + ": fitted on checkpoint " + s.source_hash + ", expected " +
                            expected_source_hash);
  return s;
}

FisherAccumulator accumulate_fisher(const diffusion::Checkpoint& ck, const diffusion::Dataset& data,
                                    std::uint64_t seed) {
  const numeric::Mlp net(ck.net);
  FisherAccumulator acc(net.last_layer_size());
  const bool conditional = ck.net.condition_count > 0;
  if (conditional && !data.conditional()) throw ConfigError("laplace: conditional network needs a cond column");
  const numeric::Rng root(seed);
  constexpr Eigen::Index kChunk = 1024;
  const auto n = static_cast<Eigen::Index>(data.size());
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    diffusion::RegressionBatch batch;
    batch.inputs.resize(len, data.x.cols());
    batch.targets.resize(len, data.x.cols());
    std::vector<int> cond;
    for (Eigen::Index r = 0; r < len; ++r) {
      const Matrix row = data.x.row(start + r);
      numeric::Fnv1a key;
      key.update(std::as_bytes(std::span(row.data(), static_cast<std::size_t>(row.size()))));
      if (conditional) {
        cond.push_back(data.cond[static_cast<std::size_t>(start + r)]);
        key.update_u64(static_cast<std::uint64_t>(cond.back()));
      }
      numeric::Rng rng = root.fork(key.digest());
      auto one = ck.objective == diffusion::Objective::epsilon_prediction
                     ? diffusion::draw_diffusion_batch(ck.schedule, row, rng)
                     : diffusion::draw_flow_batch(row, rng);
      batch.inputs.row(r) = one.inputs.row(0);
      batch.targets.row(r) = one.targets.row(0);
      batch.times.push_back(one.times[0]);
    }
    numeric::ForwardCache cache;
    const Matrix pred = net.forward(ck.sampling_params(), batch.inputs, batch.times, cond, &cache);
    // Gradient of the per-example loss ||f - target||^2.
    const Matrix dy = 2.0 * (pred - batch.targets);
    acc.add(net.last_layer_per_example_grads(cache, dy));
  }
  return acc;
}

LaplaceState fit_laplace(const diffusion::Checkpoint& ck, const diffusion::Dataset& data,
                         const LaplaceFitOptions& opts) {
  if (!(opts.fraction > 0.0 && opts.fraction <= 1.0)) throw ConfigError("laplace: fit fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::ceil(opts.fraction * static_cast<double>(data.size())));
  if (data.size() == 0 || count == 0) throw ConfigError("laplace: empty fit subset");

  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (count < data.size()) {
    numeric::Rng pick = numeric::Rng(opts.seed).fork(0x5eed);
    pick.shuffle(rows);
    rows.resize(count);
  }
  const auto fisher = accumulate_fisher(ck, count < data.size() ? data.subset(rows) : data, opts.seed);
  if ((fisher.sum_squared_grads().array() == 0.0).all())
    throw NumericError("laplace: Fisher diagonal is identically zero (is the last layer frozen?)");

  const numeric::Mlp net(ck.net);
  const auto offset = net.last_layer_offset();
  Vector mean = ck.sampling_params().values().segment(static_cast<Eigen::Index>(offset),
                                                      static_cast<Eigen::Index>(net.last_layer_size()));
  auto state = LaplaceState::from_fisher(offset, net.last_layer_names(), std::move(mean), fisher.sum_squared_grads(),
                                         opts.prior_precision, opts.sigma);
  state.source_hash = ck.hash();
  state.fit_count = fisher.sample_count();
  return state;
}

}  // namespace genunc::posterior

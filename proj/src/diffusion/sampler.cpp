#include "genunc/diffusion/sampler.hpp"

#include <cmath>

#include "genunc/error.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::diffusion {

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::ddpm: return "ddpm";
    case SamplerKind::ddim: return "ddim";
    case SamplerKind::flow_euler: return "flow-euler";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "ddpm") return SamplerKind::ddpm;
  if (name == "ddim") return SamplerKind::ddim;
  if (name == "flow-euler") return SamplerKind::flow_euler;
  throw ConfigError("unknown sampler '" + name + "'");
}

std::vector<int> respaced_timesteps(int total, int steps) {
  if (steps < 1 || steps > total)
    throw ConfigError("sampler: steps " + std::to_string(steps) + " must lie in 1.." + std::to_string(total));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) return {total};
  for (int i = 0; i < steps; ++i) {
    const double pos = 1.0 + (total - 1) * static_cast<double>(i) / (steps - 1);
    int t = static_cast<int>(std::lround(pos));
    if (!out.empty() && t <= out.back()) t = out.back() + 1;
    out.push_back(t);
  }
  return out;
}

SamplerSpec SamplerSpec::ddpm(const NoiseSchedule& schedule, int steps) {
  if (steps == 0) steps = schedule.steps();
  return SamplerSpec{SamplerKind::ddpm, respaced_timesteps(schedule.steps(), steps), 1.0};
}

SamplerSpec SamplerSpec::ddim(const NoiseSchedule& schedule, int steps, double eta) {
  SamplerSpec s{SamplerKind::ddim, respaced_timesteps(schedule.steps(), steps), eta};
  s.validate(&schedule);
  return s;
}

SamplerSpec SamplerSpec::flow_euler(int steps) {
  if (steps < 1) throw ConfigError("flow-euler: steps must be positive");
  std::vector<int> ts(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) ts[static_cast<std::size_t>(i)] = i + 1;
  return SamplerSpec{SamplerKind::flow_euler, std::move(ts), 0.0};
}

bool SamplerSpec::stochastic() const {
  return kind == SamplerKind::ddpm || (kind == SamplerKind::ddim && eta > 0.0);
}

void SamplerSpec::validate(const NoiseSchedule* schedule) const {
  if (timesteps.empty()) throw ConfigError("sampler: empty step schedule");
  for (std::size_t i = 1; i < timesteps.size(); ++i)
    if (timesteps[i] <= timesteps[i - 1]) throw ConfigError("sampler: step schedule must be strictly increasing");
  if (kind == SamplerKind::flow_euler) return;
  if (!schedule) throw ConfigError("sampler: diffusion samplers need a noise schedule");
  if (timesteps.front() < 1 || timesteps.back() > schedule->steps())
    throw ConfigError("sampler: step schedule leaves 1..T");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("sampler: eta must lie in [0, 1]");
}

SeedBundle make_seed_bundle(std::uint64_t base_seed, std::int64_t seed_id, std::size_t dim,
                            const SamplerSpec& noise_sampler) {
  numeric::Rng rng = numeric::Rng(base_seed).fork(static_cast<std::uint64_t>(seed_id));
  SeedBundle b;
  b.seed_id = seed_id;
  b.initial_noise.resize(static_cast<Eigen::Index>(dim));
  for (auto& v : b.initial_noise) v = rng.normal();
  if (noise_sampler.stochastic()) {
    b.noise_grid = noise_sampler.timesteps;
    b.step_noises.resize(static_cast<Eigen::Index>(b.noise_grid.size()), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < b.step_noises.size(); ++i) b.step_noises.data()[i] = rng.normal();
  }
  return b;
}

Matrix coupled_step_noises(const SeedBundle& bundle, const NoiseSchedule& schedule, const SamplerSpec& target) {
  if (!bundle.has_step_noises())
    throw ConfigError("sampler '" + to_string(target.kind) + "' needs per-step noises but seed bundle " +
                      std::to_string(bundle.seed_id) + " has none");
  if (bundle.noise_grid == target.timesteps) return bundle.step_noises;

  const auto dim = bundle.step_noises.cols();
  const auto& grid = bundle.noise_grid;
  Matrix out = Matrix::Zero(target.steps(), dim);
  std::size_t j = 0;
  for (std::size_t i = 0; i < target.timesteps.size(); ++i) {
    const int lo = i == 0 ? 0 : target.timesteps[i - 1];
    const int hi = target.timesteps[i];
    while (j < grid.size() && grid[j] <= lo) ++j;
    std::size_t first = j;
    double wsum = 0.0;
    Vector acc = Vector::Zero(dim);
    for (; j < grid.size() && grid[j] <= hi; ++j) {
      const int prev = j == 0 ? 0 : grid[j - 1];
      const double w = 1.0 - schedule.alpha_bar(grid[j]) / schedule.alpha_bar(prev);
      acc += std::sqrt(w) * bundle.step_noises.row(static_cast<Eigen::Index>(j)).transpose();
      wsum += w;
    }
    const std::size_t count = j - first;
    if (count == 1) {
      out.row(static_cast<Eigen::Index>(i)) = bundle.step_noises.row(static_cast<Eigen::Index>(first));
    } else if (count > 1) {
      out.row(static_cast<Eigen::Index>(i)) = acc.transpose() / std::sqrt(wsum);
    } else if (i > 0) {
      // The final transition into t = 0 is noiseless, so only i > 0 needs a fine step.
      throw ConfigError("sampler: step schedule is finer than the seed bundle's noise grid");
    }
  }
  return out;
}

namespace {

Matrix initial_states(std::span<const SeedBundle> bundles, Eigen::Index dim) {
  Matrix x(static_cast<Eigen::Index>(bundles.size()), dim);
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    if (bundles[b].initial_noise.size() != dim)
      throw DimensionError("sampler: seed bundle " + std::to_string(bundles[b].seed_id) + " has noise of dimension " +
                           std::to_string(bundles[b].initial_noise.size()) + ", expected " + std::to_string(dim));
    x.row(static_cast<Eigen::Index>(b)) = bundles[b].initial_noise.transpose();
  }
  return x;
}

}  // namespace

Matrix sample_batch(const numeric::Mlp& net, const numeric::ParamVector& params, const NoiseSchedule* schedule,
                    const SamplerSpec& sampler, std::span<const SeedBundle> bundles, std::span<const int> cond) {
  sampler.validate(schedule);
  const auto dim = static_cast<Eigen::Index>(net.config().input_dim);
  Matrix x = initial_states(bundles, dim);
  const auto B = x.rows();
  if (B == 0) return x;
  std::vector<double> times(static_cast<std::size_t>(B));

  if (sampler.kind == SamplerKind::flow_euler) {
    const int n = sampler.steps();
    const double dt = 1.0 / n;
    for (int i = 0; i < n; ++i) {
      std::fill(times.begin(), times.end(), kFlowTimeScale * i * dt);
      x += dt * net.forward(params, x, times, cond);
    }
    return x;
  }

  std::vector<Matrix> noises;
  if (sampler.stochastic()) {
    noises.reserve(bundles.size());
    for (const auto& b : bundles) noises.push_back(coupled_step_noises(b, *schedule, sampler));
  }
  const auto& ts = sampler.timesteps;
  for (std::size_t i = ts.size(); i-- > 0;) {
    const int t = ts[i];
    const int t_prev = i == 0 ? 0 : ts[i - 1];
    const double ab = schedule->alpha_bar(t);
    const double ab_prev = schedule->alpha_bar(t_prev);
    std::fill(times.begin(), times.end(), static_cast<double>(t));
    const Matrix eps = net.forward(params, x, times, cond);

    double noise_scale = 0.0;
    if (sampler.kind == SamplerKind::ddpm) {
      const double beta = 1.0 - ab / ab_prev;
      const double alpha = 1.0 - beta;
      x = (x - (beta / std::sqrt(1.0 - ab)) * eps) / std::sqrt(alpha);
      noise_scale = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
    } else {
      const double sigma =
          sampler.eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
      const Matrix x0 = (x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
      x = std::sqrt(ab_prev) * x0 + std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma)) * eps;
      noise_scale = sigma;
    }
    if (noise_scale > 0.0) {
      for (Eigen::Index b = 0; b < B; ++b)
        x.row(b) += noise_scale * noises[static_cast<std::size_t>(b)].row(static_cast<Eigen::Index>(i));
    }
  }
  return x;
}

Vector sample(const numeric::Mlp& net, const numeric::ParamVector& params, const NoiseSchedule* schedule,
              const SamplerSpec& sampler, const SeedBundle& bundle, std::optional<int> cond) {
  const int c[1] = {cond.value_or(0)};
  return sample_batch(net, params, schedule, sampler, std::span(&bundle, 1),
                      cond ? std::span<const int>(c, 1) : std::span<const int>())
      .row(0)
      .transpose();
}

}  // namespace genunc::diffusion

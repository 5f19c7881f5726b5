#include "genunc/diffusion/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "genunc/diffusion/objectives.hpp"
#include "genunc/error.hpp"
#include "genunc/numeric/adam.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::diffusion {

void TrainConfig::validate(std::size_t dataset_size) const {
  if (epochs < 0) throw ConfigError("train: epochs must be non-negative");
  if (batch_size == 0) throw ConfigError("train: batch size must be positive");
  if (batch_size > dataset_size)
    throw ConfigError("train: batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                      std::to_string(dataset_size));
  if (!(lr > 0)) throw ConfigError("train: lr must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("train: ema decay must lie in [0, 1)");
}

namespace {

std::span<const int> cond_span(const numeric::Mlp& net, const std::vector<int>& cond) {
  if (net.config().condition_count == 0) return {};
  return cond;
}

LossResult objective_loss(const numeric::Mlp& net, const numeric::ParamVector& params, Objective objective,
                          const NoiseSchedule& schedule, const Matrix& x, std::span<const int> cond,
                          numeric::Rng& rng) {
  return objective == Objective::epsilon_prediction ? diffusion_loss(net, params, schedule, x, cond, rng)
                                                    : flow_matching_loss(net, params, x, cond, rng);
}

}  // namespace

double evaluate_loss(const numeric::Mlp& net, const numeric::ParamVector& params, Objective objective,
                     const NoiseSchedule& schedule, const Dataset& data, std::uint64_t seed, int repeats) {
  numeric::Rng rng(seed);
  auto cond = cond_span(net, data.cond);
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    RegressionBatch batch = objective == Objective::epsilon_prediction ? draw_diffusion_batch(schedule, data.x, rng)
                                                                       : draw_flow_batch(data.x, rng);
    total += squared_error(net.forward(params, batch.inputs, batch.times, cond), batch.targets).loss;
  }
  return total / repeats;
}

TrainResult train(const TrainConfig& cfg, const numeric::MlpConfig& net_cfg, const NoiseSchedule& schedule,
                  const Dataset& data, const std::filesystem::path& loss_log) {
  cfg.validate(data.size());
  if (data.dim() != net_cfg.input_dim || net_cfg.output_dim != net_cfg.input_dim)
    throw ConfigError("train: network dims do not match the dataset dimension " + std::to_string(data.dim()));
  if (net_cfg.condition_count > 0) {
    if (!data.conditional()) throw ConfigError("train: conditional network needs a cond column");
    for (int c : data.cond)
      if (c < 0 || static_cast<std::size_t>(c) >= net_cfg.condition_count)
        throw ConfigError("train: condition label " + std::to_string(c) + " out of range");
  }

  const numeric::Mlp net(net_cfg);
  numeric::Rng root(cfg.seed);
  TrainResult out;
  Checkpoint& ck = out.checkpoint;
  ck.net = net_cfg;
  ck.objective = cfg.objective;
  ck.schedule = schedule;
  ck.seed = cfg.seed;
  ck.params = net.init(root.fork(1).next_u64());
  ck.ema = ck.params;

  std::ofstream log;
  if (!loss_log.empty()) {
    log.open(loss_log, std::ios::trunc);
    if (!log) throw IoError("cannot write " + loss_log.string());
    log << "epoch,loss\n";
  }
  char buf[64];
  auto record = [&](int epoch, double loss) {
    out.loss_trace.push_back(loss);
    if (log.is_open()) {
      std::snprintf(buf, sizeof buf, "%d,%.17g\n", epoch, loss);
      log << buf;
    }
  };
  record(0, evaluate_loss(net, ck.params, cfg.objective, schedule, data, root.fork(2).next_u64()));

  numeric::AdamState adam = numeric::AdamState::init(ck.params.size(), numeric::AdamConfig{cfg.lr});
  numeric::Rng rng = root.fork(3);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batches = data.size() / cfg.batch_size;
  const auto d = static_cast<Eigen::Index>(data.dim());
  Matrix xb(static_cast<Eigen::Index>(cfg.batch_size), d);
  std::vector<int> cb(net_cfg.condition_count > 0 ? cfg.batch_size : 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      for (std::size_t r = 0; r < cfg.batch_size; ++r) {
        const std::size_t src = order[bi * cfg.batch_size + r];
        xb.row(static_cast<Eigen::Index>(r)) = data.x.row(static_cast<Eigen::Index>(src));
        if (!cb.empty()) cb[r] = data.cond[src];
      }
      LossResult l = objective_loss(net, ck.params, cfg.objective, schedule, xb, cb, rng);
      if (!(l.loss < kDivergenceLoss))
        throw NumericError("train: loss diverged (" + std::to_string(l.loss) + ") at epoch " + std::to_string(epoch));
      numeric::adam_step(adam, ck.params, l.grad);
      ++ck.train_steps;
      const double steps = static_cast<double>(ck.train_steps);
      const double decay = std::min(cfg.ema_decay, (1.0 + steps) / (10.0 + steps));
      ck.ema.values() = decay * ck.ema.values() + (1.0 - decay) * ck.params.values();
      sum += l.loss;
    }
    record(epoch, sum / static_cast<double>(batches));
  }
  return out;
}

}  // namespace genunc::diffusion

#include "genunc/diffusion/objectives.hpp"

#include <cmath>
#include <sstream>

#include "genunc/diffusion/sampler.hpp"
#include "genunc/error.hpp"

namespace genunc::diffusion {

RegressionBatch draw_diffusion_batch(const NoiseSchedule& schedule, const Matrix& x0, numeric::Rng& rng) {
  const auto B = x0.rows();
  const auto d = x0.cols();
  RegressionBatch out;
  out.inputs.resize(B, d);
  out.targets.resize(B, d);
  out.times.resize(static_cast<std::size_t>(B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
    const double ab = schedule.alpha_bar(t);
    for (Eigen::Index j = 0; j < d; ++j) out.targets(b, j) = rng.normal();
    out.inputs.row(b) = std::sqrt(ab) * x0.row(b) + std::sqrt(1.0 - ab) * out.targets.row(b);
    out.times[static_cast<std::size_t>(b)] = t;
  }
  return out;
}

RegressionBatch draw_flow_batch(const Matrix& x_data, numeric::Rng& rng) {
  const auto B = x_data.rows();
  const auto d = x_data.cols();
  RegressionBatch out;
  out.inputs.resize(B, d);
  out.targets.resize(B, d);
  out.times.resize(static_cast<std::size_t>(B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const double t = rng.uniform();
    Eigen::RowVectorXd noise(d);
    for (Eigen::Index j = 0; j < d; ++j) noise[j] = rng.normal();
    out.inputs.row(b) = (1.0 - t) * noise + t * x_data.row(b);
    out.targets.row(b) = x_data.row(b) - noise;
    out.times[static_cast<std::size_t>(b)] = kFlowTimeScale * t;
  }
  return out;
}

RegressionLoss squared_error(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw DimensionError("loss: prediction and target shapes differ");
  const double B = static_cast<double>(prediction.rows());
  Matrix diff = prediction - target;
  return RegressionLoss{diff.squaredNorm() / B, (2.0 / B) * diff};
}

namespace {

LossResult regress(const numeric::Mlp& net, const numeric::ParamVector& params, const RegressionBatch& batch,
                   std::span<const int> cond) {
  numeric::ForwardCache cache;
  const Matrix pred = net.forward(params, batch.inputs, batch.times, cond, &cache);
  RegressionLoss l = squared_error(pred, batch.targets);
  if (!std::isfinite(l.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss on a batch of " << batch.inputs.rows() << " rows (max |input| "
        << batch.inputs.cwiseAbs().maxCoeff() << ", max |prediction| " << pred.cwiseAbs().maxCoeff() << ")";
    throw NumericError(msg.str());
  }
  return LossResult{l.loss, net.backward(params, cache, l.dloss)};
}

}  // namespace

LossResult diffusion_loss(const numeric::Mlp& net, const numeric::ParamVector& params, const NoiseSchedule& schedule,
                          const Matrix& x0, std::span<const int> cond, numeric::Rng& rng) {
  if (x0.rows() == 0) throw ConfigError("diffusion loss: empty batch");
  return regress(net, params, draw_diffusion_batch(schedule, x0, rng), cond);
}

LossResult flow_matching_loss(const numeric::Mlp& net, const numeric::ParamVector& params, const Matrix& x_data,
                              std::span<const int> cond, numeric::Rng& rng) {
  if (x_data.rows() == 0) throw ConfigError("flow matching loss: empty batch");
  return regress(net, params, draw_flow_batch(x_data, rng), cond);
}

}  // namespace genunc::diffusion

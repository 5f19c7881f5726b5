#include "genunc/numeric/adam.hpp"

#include <cmath>
#include <string>

#include "genunc/error.hpp"

namespace genunc::numeric {

AdamState AdamState::init(std::size_t n, AdamConfig hp) {
  if (!(hp.beta1 > 0 && hp.beta1 < 1 && hp.beta2 > 0 && hp.beta2 < 1))
    throw ConfigError("adam: betas must lie in (0, 1)");
  if (!(hp.lr > 0 && hp.eps > 0)) throw ConfigError("adam: lr and eps must be positive");
  const auto len = static_cast<Eigen::Index>(n);
  return AdamState{Vector::Zero(len), Vector::Zero(len), 0, hp};
}

void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (grad.size() != params.size() || state.first_moment.size() != n || state.second_moment.size() != n)
    throw DimensionError("adam: state, parameter and gradient sizes differ");
  const Vector& g = grad.values();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(g[i]))
      throw NumericError("adam: non-finite gradient at coordinate " + std::to_string(i));

  const auto& hp = state.hp;
  state.step_count += 1;
  state.first_moment = hp.beta1 * state.first_moment + (1.0 - hp.beta1) * g;
  state.second_moment = hp.beta2 * state.second_moment + (1.0 - hp.beta2) * g.cwiseAbs2();
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  params.values().array() -=
      hp.lr * (state.first_moment.array() / c1) / ((state.second_moment.array() / c2).sqrt() + hp.eps);
}

}  // namespace genunc::numeric

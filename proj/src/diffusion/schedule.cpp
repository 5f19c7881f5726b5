#include "genunc/diffusion/schedule.hpp"

#include <cmath>
#include <numbers>

#include "genunc/error.hpp"

namespace genunc::diffusion {

std::string to_string(ScheduleKind k) { return k == ScheduleKind::linear ? "linear" : "cosine"; }

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "linear") return ScheduleKind::linear;
  if (name == "cosine") return ScheduleKind::cosine;
  throw ConfigError("unknown noise schedule '" + name + "'");
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ConfigError("noise schedule: T must be positive");
  double ab = 1.0;
  alpha_bars_.reserve(betas_.size());
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("noise schedule: betas must lie in (0, 1)");
    ab *= 1.0 - b;
    alpha_bars_.push_back(ab);
  }
  if (!(alpha_bars_.back() < 0.01))
    throw ConfigError("noise schedule: terminal alpha_bar " + std::to_string(alpha_bars_.back()) +
                      " is not below 0.01; x_T would be far from N(0, I)");
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("noise schedule: T must be positive");
  std::vector<double> b(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    b[static_cast<std::size_t>(i)] =
        steps == 1 ? beta_end : beta_start + (beta_end - beta_start) * i / static_cast<double>(steps - 1);
  return NoiseSchedule(std::move(b));
}

NoiseSchedule NoiseSchedule::cosine(int steps, double offset) {
  if (steps < 1) throw ConfigError("noise schedule: T must be positive");
  auto f = [&](double t) {
    const double c = std::cos((t / steps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> b(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t)
    b[static_cast<std::size_t>(t - 1)] = std::min(1.0 - f(t) / f(t - 1), 0.999);
  return NoiseSchedule(std::move(b));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) { return NoiseSchedule(std::move(betas)); }

NoiseSchedule NoiseSchedule::make(ScheduleKind kind, int steps) {
  return kind == ScheduleKind::linear ? linear(steps) : cosine(steps);
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw ConfigError("timestep " + std::to_string(t) + " outside 1..T");
  return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps()) throw ConfigError("timestep " + std::to_string(t) + " outside 0..T");
  return alpha_bars_[static_cast<std::size_t>(t - 1)];
}

Vector forward_noise_ab(double alpha_bar, const Vector& x0, const Vector& eps) {
  if (x0.size() != eps.size()) throw DimensionError("forward_noise: x0 and eps differ in length");
  return std::sqrt(alpha_bar) * x0 + std::sqrt(1.0 - alpha_bar) * eps;
}

Vector forward_noise(const NoiseSchedule& schedule, const Vector& x0, int t, const Vector& eps) {
  if (t < 1 || t > schedule.steps()) throw ConfigError("forward_noise: timestep " + std::to_string(t) + " outside 1..T");
  return forward_noise_ab(schedule.alpha_bar(t), x0, eps);
}

}  // namespace genunc::diffusion

#pragma once

#include <string>
#include <vector>

#include "genunc/numeric/linalg.hpp"

namespace genunc::diffusion {

using numeric::Matrix;
using numeric::Vector;

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Discrete noise schedule over timesteps 1..T. Construction rejects any
/// schedule whose terminal alpha-bar is not below 0.01.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02);
  static NoiseSchedule cosine(int steps = 1000, double offset = 0.008);
  static NoiseSchedule from_betas(std::vector<double> betas);
  static NoiseSchedule make(ScheduleKind kind, int steps);

  int steps() const { return static_cast<int>(betas_.size()); }
  /// beta_t for t in 1..T.
  double beta(int t) const;
  /// prod_{s<=t}(1 - beta_s); alpha_bar(0) = 1.
  double alpha_bar(int t) const;
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

 private:
  explicit NoiseSchedule(std::vector<double> betas);

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, for 1 <= t <= T.
Vector forward_noise(const NoiseSchedule& schedule, const Vector& x0, int t, const Vector& eps);

/// Same closed form with an explicit alpha-bar, used at the schedule limits.
Vector forward_noise_ab(double alpha_bar, const Vector& x0, const Vector& eps);

}  // namespace genunc::diffusion

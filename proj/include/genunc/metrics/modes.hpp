#pragma once

#include <utility>
#include <vector>

#include "genunc/numeric/linalg.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::metrics {

using numeric::Matrix;
using numeric::Vector;

/// Gaussian-mixture toy target: isotropic modes of equal weight.
struct ModeSpec {
  Matrix centers;  // K x d
  double mode_std = 0.05;
  double hallucination_radius = 3.0;  // in units of mode_std

  /// per_side^2 centers on a regular grid spanning [-span, span]^2.
  static ModeSpec grid(int per_side = 5, double span = 2.0, double mode_std = 0.05, double hallucination_radius = 3.0);

  std::size_t mode_count() const { return static_cast<std::size_t>(centers.rows()); }
  void validate() const;
};

/// n draws with their mode labels (mode chosen uniformly).
std::pair<Matrix, std::vector<int>> sample_modes(const ModeSpec& spec, std::size_t n, numeric::Rng& rng);

struct ModeStats {
  std::vector<double> coverage;  // share of non-hallucinated samples per mode
  std::vector<std::size_t> counts;
  double hallucination_rate = 0.0;
  std::vector<bool> hallucinated;  // per sample
};

/// Assigns every sample to its nearest center; a sample is hallucinated when
/// that distance exceeds hallucination_radius * mode_std.
ModeStats mode_stats(const Matrix& samples, const ModeSpec& spec);

}  // namespace genunc::metrics

#include "genunc/metrics/modes.hpp"

#include <cmath>
#include <limits>

#include "genunc/error.hpp"

namespace genunc::metrics {

ModeSpec ModeSpec::grid(int per_side, double span, double mode_std, double hallucination_radius) {
  if (per_side < 1) throw ConfigError("mode grid needs at least one mode per side");
  ModeSpec spec;
  spec.mode_std = mode_std;
  spec.hallucination_radius = hallucination_radius;
  spec.centers.resize(per_side * per_side, 2);
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      double step = per_side == 1 ? 0.0 : 2.0 * span / (per_side - 1);
      spec.centers(i * per_side + j, 0) = -span + step * i;
      spec.centers(i * per_side + j, 1) = -span + step * j;
    }
  }
  spec.validate();
  return spec;
}

void ModeSpec::validate() const {
  if (centers.rows() == 0 || centers.cols() == 0) throw ConfigError("mode spec has no centers");
  if (!(mode_std > 0.0)) throw ConfigError("mode_std must be positive");
  if (!(hallucination_radius >= 1.0)) throw ConfigError("hallucination_radius must be at least 1");
  for (Eigen::Index a = 0; a < centers.rows(); ++a)
    for (Eigen::Index b = a + 1; b < centers.rows(); ++b)
      if ((centers.row(a) - centers.row(b)).squaredNorm() == 0.0)
        throw ConfigError("mode centers " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
}

std::pair<Matrix, std::vector<int>> sample_modes(const ModeSpec& spec, std::size_t n, numeric::Rng& rng) {
  spec.validate();
  const auto d = spec.centers.cols();
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int m = static_cast<int>(rng.below(spec.mode_count()));
    labels[i] = m;
    for (Eigen::Index c = 0; c < d; ++c) x(i, c) = spec.centers(m, c) + spec.mode_std * rng.normal();
  }
  return {std::move(x), std::move(labels)};
}

ModeStats mode_stats(const Matrix& samples, const ModeSpec& spec) {
  spec.validate();
  if (samples.cols() != spec.centers.cols())
    throw DimensionError("samples have " + std::to_string(samples.cols()) + " columns, modes have " +
                         std::to_string(spec.centers.cols()));
  ModeStats out;
  out.counts.assign(spec.mode_count(), 0);
  out.hallucinated.assign(samples.rows(), false);
  const double limit = spec.hallucination_radius * spec.mode_std;
  std::size_t bad = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index m = 0; m < spec.centers.rows(); ++m) {
      double dist = (samples.row(i) - spec.centers.row(m)).norm();
      if (dist < best) {
        best = dist;
        arg = m;
      }
    }
    if (!(best <= limit)) {
      out.hallucinated[i] = true;
      ++bad;
    } else {
      ++out.counts[arg];
    }
  }
  std::size_t good = samples.rows() - bad;
  out.coverage.assign(spec.mode_count(), 0.0);
  if (good > 0)
    for (std::size_t m = 0; m < out.counts.size(); ++m)
      out.coverage[m] = static_cast<double>(out.counts[m]) / static_cast<double>(good);
  out.hallucination_rate = samples.rows() ? static_cast<double>(bad) / static_cast<double>(samples.rows()) : 0.0;
  return out;
}

}  // namespace genunc::metrics

#include "genunc/uncertainty/predictive.hpp"

#include <cmath>
#include <numbers>

#include "genunc/error.hpp"

namespace genunc::uncertainty {

void PredictiveGaussian::validate() const {
  if (!(sem_noise > 0)) throw NumericError("predictive: observation noise must be positive");
  if (mean.size() != variance.size()) throw DimensionError("predictive: mean and variance lengths differ");
  if (!mean.allFinite() || !variance.allFinite()) throw NumericError("predictive: non-finite moments");
  if ((variance.array() <= 0.0).any()) throw NumericError("predictive: variance must be positive");
}

PredictiveGaussian moment_match(const Matrix& features, double sigma2) {
  if (features.rows() == 0) throw ConfigError("moment match: need at least one feature vector");
  if (!(sigma2 > 0)) throw ConfigError("moment match: sigma^2 must be positive");
  const double M = static_cast<double>(features.rows());
  PredictiveGaussian g;
  g.sem_noise = sigma2;
  g.mean = features.colwise().sum().transpose() / M;
  const Matrix centered = features.rowwise() - g.mean.transpose();
  g.variance = (centered.colwise().squaredNorm().transpose() / M).array() + sigma2;
  return g;
}

double gaussian_entropy(const PredictiveGaussian& g) {
  if (g.variance.size() == 0) throw DimensionError("entropy: empty predictive");
  if ((g.variance.array() <= 0.0).any()) throw NumericError("entropy: non-positive variance");
  const double c = std::log(2.0 * std::numbers::pi * std::numbers::e);
  return 0.5 * (g.variance.array().log() + c).sum();
}

Vector pixelwise_uncertainty(const Matrix& replicas, double sigma2) {
  return moment_match(replicas, sigma2).variance;
}

}  // namespace genunc::uncertainty

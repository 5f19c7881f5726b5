#pragma once

#include "genunc/numeric/linalg.hpp"

namespace genunc::uncertainty {

using numeric::Matrix;
using numeric::Vector;

/// Moment-matched Gaussian posterior predictive over feature space.
struct PredictiveGaussian {
  Vector mean;
  Vector variance;  // diagonal, includes the observation noise
  double sem_noise = 1e-3;

  void validate() const;
};

/// Collapses the mixture (1/M) sum_m N(e_m, sigma2 I) into one diagonal
/// Gaussian: mean e_bar, variance (1/M) sum_m e_m^2 - e_bar^2 + sigma2.
/// Rows of `features` are e_1..e_M. The spread is accumulated about the mean.
PredictiveGaussian moment_match(const Matrix& features, double sigma2);

/// Differential entropy 0.5 * sum_i log(2 pi e var_i).
double gaussian_entropy(const PredictiveGaussian& g);

/// Per-dimension predictive variance under the data-space likelihood
/// (identity features), before the entropy reduction.
Vector pixelwise_uncertainty(const Matrix& replicas, double sigma2);

}  // namespace genunc::uncertainty

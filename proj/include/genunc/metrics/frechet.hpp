#pragma once

#include "genunc/numeric/linalg.hpp"

namespace genunc::metrics {

using numeric::Matrix;
using numeric::Vector;

/// Covariances with an eigenvalue below this get kRegularization * I added.
inline constexpr double kCovarianceFloor = 1e-10;
inline constexpr double kRegularization = 1e-6;

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}). The trace of the
/// square root is taken from the eigenvalues of S_a^{1/2} S_b S_a^{1/2},
/// which shares its spectrum with S_a S_b but is symmetric.
double frechet_from_moments(const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b, const Matrix& cov_b);

/// Fréchet distance between Gaussians fitted to two feature sets (rows are samples).
double frechet_distance(const Matrix& a, const Matrix& b);

/// Unbiased sample covariance (n - 1 denominator).
Matrix covariance(const Matrix& x);

}  // namespace genunc::metrics

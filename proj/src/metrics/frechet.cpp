#include "genunc/metrics/frechet.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "genunc/error.hpp"

namespace genunc::metrics {

namespace {

Matrix regularized(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kCovarianceFloor)
    return cov + kRegularization * Matrix::Identity(cov.rows(), cov.cols());
  return cov;
}

Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Matrix covariance(const Matrix& x) {
  if (x.rows() < 2) throw DimensionError("covariance needs at least two samples");
  Eigen::RowVectorXd mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

double frechet_from_moments(const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b, const Matrix& cov_b) {
  const auto d = mean_a.size();
  if (mean_b.size() != d || cov_a.rows() != d || cov_a.cols() != d || cov_b.rows() != d || cov_b.cols() != d)
    throw DimensionError("frechet moments have inconsistent dimensions");
  Matrix sa = regularized(0.5 * (cov_a + cov_a.transpose()));
  Matrix sb = regularized(0.5 * (cov_b + cov_b.transpose()));
  Matrix root_a = psd_sqrt(sa);
  Matrix inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
  double trace_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  double value = (mean_a - mean_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * trace_sqrt;
  if (!std::isfinite(value)) throw NumericError("frechet distance is not finite");
  return std::max(value, 0.0);
}

double frechet_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw DimensionError("frechet inputs have " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()) +
                         " columns");
  Vector mean_a = a.colwise().mean().transpose();
  Vector mean_b = b.colwise().mean().transpose();
  return frechet_from_moments(mean_a, covariance(a), mean_b, covariance(b));
}

}  // namespace genunc::metrics

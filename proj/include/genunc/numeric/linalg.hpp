#pragma once

#include <Eigen/Dense>

namespace genunc::numeric {

// Row-major: one sample per contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace genunc::numeric

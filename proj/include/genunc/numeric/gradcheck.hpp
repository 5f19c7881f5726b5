#pragma once

#include <functional>

#include "genunc/numeric/param_vector.hpp"

namespace genunc::numeric {

using ScalarObjective = std::function<double(const ParamVector&)>;

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
Vector central_differences(const ScalarObjective& f, const ParamVector& at, double h = 1e-4);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-7);

/// Largest coordinate-wise relative error between two gradients.
double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-7);

}  // namespace genunc::numeric

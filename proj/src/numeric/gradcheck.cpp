#include "genunc/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace genunc::numeric {

Vector central_differences(const ScalarObjective& f, const ParamVector& at, double h) {
  ParamVector probe = at;
  Vector out(static_cast<Eigen::Index>(at.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double up = f(probe);
    probe.values()[i] = orig - h;
    const double down = f(probe);
    probe.values()[i] = orig;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_relative_error(const Vector& analytic, const Vector& numeric, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  return worst;
}

}  // namespace genunc::numeric

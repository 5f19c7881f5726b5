#pragma once

#include <limits>

#include "genunc/numeric/linalg.hpp"

namespace genunc::metrics {

using numeric::Matrix;
using numeric::Vector;

/// Realism denominators are clamped to at least this distance.
inline constexpr double kMinDistance = 1e-12;

/// k-NN balls around a reference set: radius(s) = distance from s to its
/// k-th nearest other reference point.
class ManifoldIndex {
 public:
  ManifoldIndex(Matrix reference, std::size_t k, std::size_t threads = 1);

  const Matrix& reference() const { return reference_; }
  std::size_t k() const { return k_; }
  const Vector& radii() const { return radii_; }

  /// True when some ball contains x.
  bool contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// max_s radius(s) / max(||x - s||, kMinDistance).
  double realism(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// min radius(s) over balls containing x; +inf when none does.
  double rarity(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  /// Fraction of rows of `points` inside the manifold.
  double coverage_of(const Matrix& points, std::size_t threads = 1) const;
  Vector realism_scores(const Matrix& points, std::size_t threads = 1) const;
  Vector rarity_scores(const Matrix& points, std::size_t threads = 1) const;

 private:
  Matrix reference_;
  std::size_t k_;
  Vector radii_;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision: share of generated points inside the reference manifold.
/// Recall: share of reference points inside the generated manifold.
PrecisionRecall precision_recall(const Matrix& generated, const Matrix& reference, std::size_t k,
                                 std::size_t threads = 1);

double realism_score(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ManifoldIndex& reference);
double rarity_score(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ManifoldIndex& reference);

}  // namespace genunc::metrics

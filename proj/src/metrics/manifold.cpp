#include "genunc/metrics/manifold.hpp"

#include <algorithm>
#include <cmath>

#include "genunc/error.hpp"
#include "genunc/numeric/parallel.hpp"

namespace genunc::metrics {

namespace {

constexpr std::size_t kBlock = 256;

double distance(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < d; ++c) {
    double diff = a[c] - b[c];
    s += diff * diff;
  }
  return std::sqrt(s);
}

Vector knn_radii(const Matrix& ref, std::size_t k, std::size_t threads) {
  const std::size_t n = ref.rows();
  const auto d = ref.cols();
  Vector radii(n);
  std::size_t blocks = (n + kBlock - 1) / kBlock;
  numeric::parallel_for(blocks, threads, [&](std::size_t b) {
    std::vector<double> dist(n - 1);
    for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
      std::size_t w = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) dist[w++] = distance(ref.row(i).data(), ref.row(j).data(), d);
      std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
      radii(i) = dist[k - 1];
    }
  });
  return radii;
}

template <typename Fn>
Vector per_row(const Matrix& points, std::size_t threads, Fn&& fn) {
  const std::size_t n = points.rows();
  Vector out(n);
  std::size_t blocks = (n + kBlock - 1) / kBlock;
  numeric::parallel_for(blocks, threads, [&](std::size_t b) {
    for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) out(i) = fn(points.row(i));
  });
  return out;
}

}  // namespace

ManifoldIndex::ManifoldIndex(Matrix reference, std::size_t k, std::size_t threads)
    : reference_(std::move(reference)), k_(k) {
  if (k_ < 1) throw ConfigError("manifold k must be at least 1");
  if (static_cast<std::size_t>(reference_.rows()) <= k_)
    throw ConfigError("manifold needs more than k=" + std::to_string(k_) + " reference points, got " +
                      std::to_string(reference_.rows()));
  radii_ = knn_radii(reference_, k_, threads);
}

bool ManifoldIndex::contains(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != reference_.cols()) throw DimensionError("manifold query has wrong dimension");
  const auto d = reference_.cols();
  Eigen::RowVectorXd q = x;
  for (Eigen::Index s = 0; s < reference_.rows(); ++s)
    if (distance(q.data(), reference_.row(s).data(), d) <= radii_(s)) return true;
  return false;
}

double ManifoldIndex::realism(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != reference_.cols()) throw DimensionError("manifold query has wrong dimension");
  const auto d = reference_.cols();
  Eigen::RowVectorXd q = x;
  double best = 0.0;
  for (Eigen::Index s = 0; s < reference_.rows(); ++s) {
    double dist = std::max(distance(q.data(), reference_.row(s).data(), d), kMinDistance);
    best = std::max(best, radii_(s) / dist);
  }
  return best;
}

double ManifoldIndex::rarity(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != reference_.cols()) throw DimensionError("manifold query has wrong dimension");
  const auto d = reference_.cols();
  Eigen::RowVectorXd q = x;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < reference_.rows(); ++s)
    if (radii_(s) < best && distance(q.data(), reference_.row(s).data(), d) <= radii_(s)) best = radii_(s);
  return best;
}

double ManifoldIndex::coverage_of(const Matrix& points, std::size_t threads) const {
  if (points.rows() == 0) return 0.0;
  Vector inside = per_row(points, threads, [&](const auto& row) { return contains(row) ? 1.0 : 0.0; });
  return inside.sum() / static_cast<double>(points.rows());
}

Vector ManifoldIndex::realism_scores(const Matrix& points, std::size_t threads) const {
  return per_row(points, threads, [&](const auto& row) { return realism(row); });
}

Vector ManifoldIndex::rarity_scores(const Matrix& points, std::size_t threads) const {
  return per_row(points, threads, [&](const auto& row) { return rarity(row); });
}

PrecisionRecall precision_recall(const Matrix& generated, const Matrix& reference, std::size_t k,
                                 std::size_t threads) {
  if (generated.cols() != reference.cols()) throw DimensionError("precision/recall inputs differ in dimension");
  ManifoldIndex real(reference, k, threads);
  ManifoldIndex fake(generated, k, threads);
  return {real.coverage_of(generated, threads), fake.coverage_of(reference, threads)};
}

double realism_score(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ManifoldIndex& reference) {
  return reference.realism(x);
}

double rarity_score(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ManifoldIndex& reference) {
  return reference.rarity(x);
}

}  // namespace genunc::metrics

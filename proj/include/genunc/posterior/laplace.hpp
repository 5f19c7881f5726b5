#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genunc/diffusion/checkpoint.hpp"
#include "genunc/diffusion/dataset.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::posterior {

using numeric::Matrix;
using numeric::Vector;

/// Running sum of squared per-example gradients (diagonal empirical Fisher).
class FisherAccumulator {
 public:
  explicit FisherAccumulator(std::size_t length = 0);

  /// Adds one row per example.
  void add(const Matrix& per_example_grads);
  void merge(const FisherAccumulator& other);

  const Vector& sum_squared_grads() const { return sum_sq_; }
  std::size_t sample_count() const { return count_; }

 private:
  Vector sum_sq_;
  std::size_t count_ = 0;
};

/// Diagonal Gaussian over the last layer: N(mean, sigma^2 (fisher + gamma)^-1).
struct LaplaceState {
  std::size_t offset = 0;  // position of the last layer in the flat vector
  std::vector<std::string> layer_names;
  Vector mean;
  Vector fisher_diag;
  double prior_precision = 1.0;
  double sigma = 1.0;
  Vector posterior_variance;
  std::string source_hash;
  std::size_t fit_count = 0;

  static LaplaceState from_fisher(std::size_t offset, std::vector<std::string> layer_names, Vector mean,
                                  Vector fisher_diag, double prior_precision, double sigma);
  void validate() const;

  /// Copy of `base` with the last-layer slice replaced by mean + sqrt(var) * z.
  numeric::ParamVector sample(const numeric::ParamVector& base, numeric::Rng& rng) const;

  void save(const std::filesystem::path& path) const;
  /// Throws HashMismatchError when the file was fitted on a different checkpoint.
  static LaplaceState load(const std::filesystem::path& path, const std::string& expected_source_hash);
};

struct LaplaceFitOptions {
  double fraction = 1.0;
  double prior_precision = 1.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Per-example diagonal Fisher of the training loss at the checkpoint's
/// sampling weights, restricted to the last layer. Every example gets one
/// (t, noise) draw from a stream keyed by the example's contents, so the
/// result is additive over disjoint datasets.
FisherAccumulator accumulate_fisher(const diffusion::Checkpoint& ck, const diffusion::Dataset& data,
                                    std::uint64_t seed);

/// Post-hoc last-layer Laplace fit on a seeded `fraction` of `data`.
LaplaceState fit_laplace(const diffusion::Checkpoint& ck, const diffusion::Dataset& data,
                         const LaplaceFitOptions& opts);

}  // namespace genunc::posterior

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>

#include "genunc/numeric/linalg.hpp"

namespace genunc::uncertainty {

using numeric::Matrix;
using numeric::Vector;

enum class FeatureKind { identity, random_projection, embedding_file };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& name);

/// Identifier of generation `m` of seed `seed_id` (m = 0 is the pretrained
/// sample, m >= 1 the posterior replicas). Embedding files are keyed by it.
std::string sample_id(std::int64_t seed_id, std::size_t m);

/// The feature extractor c_phi applied before moment matching.
class FeatureMap {
 public:
  static FeatureMap identity(std::size_t dim);
  /// Gaussian matrix with orthonormalized rows; requires out_dim <= in_dim.
  static FeatureMap random_projection(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);
  /// Explicit projection; rows are orthonormalized.
  static FeatureMap projection(const Matrix& rows);
  static FeatureMap embedding_index(std::unordered_map<std::string, Vector> index);
  /// Reads `sample_id,e_0,...,e_{d-1}`.
  static FeatureMap embedding_file(const std::filesystem::path& path);

  FeatureKind kind() const { return kind_; }
  std::size_t output_dim() const { return output_dim_; }
  const Matrix& projection_matrix() const { return projection_; }

  /// Features of a batch of samples; `ids` is only consulted in embedding mode.
  Matrix apply(const Matrix& samples, const std::vector<std::string>& ids = {}) const;

 private:
  FeatureKind kind_ = FeatureKind::identity;
  std::size_t output_dim_ = 0;
  Matrix projection_;
  std::unordered_map<std::string, Vector> index_;
};

}  // namespace genunc::uncertainty

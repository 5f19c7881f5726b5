#include "genunc/uncertainty/feature_map.hpp"

#include <fstream>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::uncertainty {

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::identity: return "identity";
    case FeatureKind::random_projection: return "random-projection";
    case FeatureKind::embedding_file: return "embedding-file";
  }
  return "?";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "identity") return FeatureKind::identity;
  if (name == "random-projection") return FeatureKind::random_projection;
  if (name == "embedding-file") return FeatureKind::embedding_file;
  throw ConfigError("unknown feature map '" + name + "'");
}

std::string sample_id(std::int64_t seed_id, std::size_t m) {
  return std::to_string(seed_id) + "_" + std::to_string(m);
}

FeatureMap FeatureMap::identity(std::size_t dim) {
  if (dim == 0) throw ConfigError("feature map: dimension must be positive");
  FeatureMap f;
  f.kind_ = FeatureKind::identity;
  f.output_dim_ = dim;
  return f;
}

FeatureMap FeatureMap::projection(const Matrix& rows) {
  if (rows.rows() == 0 || rows.rows() > rows.cols())
    throw ConfigError("feature map: projection needs 1..input_dim rows");
  // Orthonormal basis of the row space, in row order (Gram-Schmidt via QR).
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(rows.transpose()));
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows.cols(), rows.rows());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(rows.rows()).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) < 1e-12) throw NumericError("feature map: projection rows are linearly dependent");
    if (r(i, i) < 0) q.col(i) *= -1.0;  // keep the orientation of the input rows
  }
  FeatureMap f;
  f.kind_ = FeatureKind::random_projection;
  f.output_dim_ = static_cast<std::size_t>(rows.rows());
  f.projection_ = q.transpose();
  return f;
}

FeatureMap FeatureMap::random_projection(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  numeric::RngState state{seed, 0};
  return projection(numeric::gaussian_sample(state, out_dim, in_dim));
}

FeatureMap FeatureMap::embedding_index(std::unordered_map<std::string, Vector> index) {
  if (index.empty()) throw ConfigError("feature map: empty embedding index");
  const auto dim = index.begin()->second.size();
  for (const auto& [id, v] : index)
    if (v.size() != dim) throw DimensionError("feature map: embedding '" + id + "' has the wrong dimension");
  FeatureMap f;
  f.kind_ = FeatureKind::embedding_file;
  f.output_dim_ = static_cast<std::size_t>(dim);
  f.index_ = std::move(index);
  return f;
}

FeatureMap FeatureMap::embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_id", 0) != 0)
    throw ConfigError(path.string() + ": expected header 'sample_id,e_0,...'");
  std::unordered_map<std::string, Vector> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, cell;
    std::getline(ss, id, ',');
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    index[id] = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return embedding_index(std::move(index));
}

Matrix FeatureMap::apply(const Matrix& samples, const std::vector<std::string>& ids) const {
  switch (kind_) {
    case FeatureKind::identity:
      if (static_cast<std::size_t>(samples.cols()) != output_dim_)
        throw DimensionError("feature map: identity features need data dimension " + std::to_string(output_dim_));
      return samples;
    case FeatureKind::random_projection:
      if (samples.cols() != projection_.cols()) throw DimensionError("feature map: projection input dimension mismatch");
      return samples * projection_.transpose();
    case FeatureKind::embedding_file: {
      if (ids.size() != static_cast<std::size_t>(samples.rows()))
        throw ConfigError("feature map: embedding lookup needs one sample id per row");
      Matrix out(samples.rows(), static_cast<Eigen::Index>(output_dim_));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = index_.find(ids[i]);
        if (it == index_.end()) throw ConfigError("feature map: no embedding for sample '" + ids[i] + "'");
        out.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
      }
      return out;
    }
  }
  return samples;
}

}  // namespace genunc::uncertainty

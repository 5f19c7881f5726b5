#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "genunc/numeric/linalg.hpp"

namespace genunc::numeric {

/// One named rows x cols block inside a flat parameter array.
struct LayerSlot {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const LayerSlot&) const = default;
};

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Flat parameter storage with a contiguous, non-overlapping block layout.
class ParamVector {
 public:
  ParamVector() = default;
  /// Zero-initialized storage for `layout`. Offsets must tile [0, total).
  explicit ParamVector(std::vector<LayerSlot> layout);
  ParamVector(std::vector<LayerSlot> layout, Vector values);

  /// Builds a vector from named blocks laid out in order.
  static ParamVector from_blocks(const std::vector<std::pair<std::string, Matrix>>& blocks);
  std::vector<std::pair<std::string, Matrix>> unflatten() const;

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const std::vector<LayerSlot>& layout() const { return layout_; }
  const LayerSlot& slot(const std::string& name) const;
  bool has_slot(const std::string& name) const;

  MatrixMap block(const std::string& name);
  ConstMatrixMap block(const std::string& name) const;

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  bool same_layout(const ParamVector& other) const { return layout_ == other.layout_; }
  bool all_finite() const;
  /// Content hash of the values (layout excluded).
  std::uint64_t fingerprint() const;

  /// Zero vector with this layout.
  ParamVector zeros_like() const { return ParamVector(layout_); }

 private:
  std::vector<LayerSlot> layout_;
  Vector values_;
};

}  // namespace genunc::numeric

#include "genunc/numeric/param_vector.hpp"

#include <cmath>

#include "genunc/error.hpp"
#include "genunc/numeric/hash.hpp"

namespace genunc::numeric {

namespace {

std::size_t checked_total(const std::vector<LayerSlot>& layout) {
  std::size_t next = 0;
  for (const auto& s : layout) {
    if (s.offset != next)
      throw DimensionError("parameter layout: slot '" + s.name + "' is not contiguous");
    next += s.size();
  }
  return next;
}

}  // namespace

ParamVector::ParamVector(std::vector<LayerSlot> layout)
    : layout_(std::move(layout)), values_(Vector::Zero(static_cast<Eigen::Index>(checked_total(layout_)))) {}

ParamVector::ParamVector(std::vector<LayerSlot> layout, Vector values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (checked_total(layout_) != size())
    throw DimensionError("parameter layout does not match value count");
}

ParamVector ParamVector::from_blocks(const std::vector<std::pair<std::string, Matrix>>& blocks) {
  std::vector<LayerSlot> layout;
  std::size_t offset = 0;
  for (const auto& [name, m] : blocks) {
    LayerSlot s{name, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), offset};
    offset += s.size();
    layout.push_back(s);
  }
  ParamVector p(std::move(layout));
  for (const auto& [name, m] : blocks) p.block(name) = m;
  return p;
}

std::vector<std::pair<std::string, Matrix>> ParamVector::unflatten() const {
  std::vector<std::pair<std::string, Matrix>> out;
  out.reserve(layout_.size());
  for (const auto& s : layout_) out.emplace_back(s.name, Matrix(block(s.name)));
  return out;
}

const LayerSlot& ParamVector::slot(const std::string& name) const {
  for (const auto& s : layout_)
    if (s.name == name) return s;
  throw DimensionError("no parameter slot named '" + name + "'");
}

bool ParamVector::has_slot(const std::string& name) const {
  for (const auto& s : layout_)
    if (s.name == name) return true;
  return false;
}

MatrixMap ParamVector::block(const std::string& name) {
  const auto& s = slot(name);
  return MatrixMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                   static_cast<Eigen::Index>(s.cols));
}

ConstMatrixMap ParamVector::block(const std::string& name) const {
  const auto& s = slot(name);
  return ConstMatrixMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                        static_cast<Eigen::Index>(s.cols));
}

bool ParamVector::all_finite() const { return values_.allFinite(); }

std::uint64_t ParamVector::fingerprint() const {
  return fnv1a(std::as_bytes(std::span(values_.data(), size())));
}

}  // namespace genunc::numeric

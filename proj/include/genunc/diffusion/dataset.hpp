#pragma once

#include <filesystem>
#include <vector>

#include "genunc/numeric/linalg.hpp"

namespace genunc::diffusion {

/// Rows of `x` are data points; `cond` is empty or holds one label per row.
struct Dataset {
  numeric::Matrix x;
  std::vector<int> cond;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  bool conditional() const { return !cond.empty(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// CSV with header `x0,x1,...,x{d-1}[,cond]`. Written with 17 significant digits.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, std::size_t dim = 0);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace genunc::diffusion

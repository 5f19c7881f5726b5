#include "genunc/diffusion/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "genunc/error.hpp"

namespace genunc::diffusion {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    if (conditional()) out.cond.push_back(cond[rows[i]]);
  }
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, std::size_t dim) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  const std::size_t d = data.size() > 0 ? data.dim() : dim;
  for (std::size_t j = 0; j < d; ++j) f << (j ? "," : "") << 'x' << j;
  f << ",cond\n";
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      f << (j ? "," : "") << buf;
    }
    f << ',';
    if (data.conditional()) f << data.cond[i];
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw ConfigError(path.string() + ": empty dataset file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  bool has_cond = !header.empty() && header.back() == "cond";
  const std::size_t d = header.size() - (has_cond ? 1 : 0);
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "x" + std::to_string(j)) throw ConfigError(path.string() + ": bad header column '" + header[j] + "'");
  if (d == 0) throw ConfigError(path.string() + ": dataset has no coordinate columns");

  std::vector<double> values;
  std::vector<int> cond;
  bool any_cond = false;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, ',')) throw ConfigError(path.string() + ": short row " + std::to_string(n + 2));
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": non-numeric cell '" + cell + "'");
      }
    }
    if (has_cond) {
      if (std::getline(ss, cell, ',') && !cell.empty()) {
        cond.push_back(std::stoi(cell));
        any_cond = true;
      } else {
        cond.push_back(-1);
      }
    }
    ++n;
  }
  Dataset out;
  out.x = Eigen::Map<numeric::Matrix>(values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  if (any_cond) {
    for (int c : cond)
      if (c < 0) throw ConfigError(path.string() + ": cond column is only partially filled");
    out.cond = std::move(cond);
  }
  return out;
}

}  // namespace genunc::diffusion

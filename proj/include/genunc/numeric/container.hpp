#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace genunc::numeric {

/// Self-describing binary container: a JSON header followed by named
/// little-endian float64 arrays.
///
///   bytes 0..7   magic "GUNCBIN1"
///   u32          container format version
///   u64          header length, then the UTF-8 JSON header
///   arrays       raw doubles, in header order
///
/// The header always carries `format_version`, the `kind` of payload and
/// an `arrays` list of {name, length}.
struct Container {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  void add(std::string name, std::vector<double> values);
  bool has(const std::string& name) const;
  const std::vector<double>& array(const std::string& name) const;

  std::string to_bytes() const;
  static Container from_bytes(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path, const std::string& expected_kind = {});
};

/// FNV-1a of a file's bytes, as hex.
std::string file_hash(const std::filesystem::path& path);

}  // namespace genunc::numeric

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace genunc::numeric {

// 64-bit FNV-1a. Used for content hashes of checkpoints, configs and caches.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  void update_u64(std::uint64_t v);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

std::uint64_t fnv1a(std::span<const std::byte> bytes);
std::uint64_t fnv1a(std::string_view text);

std::string to_hex(std::uint64_t v);
std::uint64_t from_hex(std::string_view hex);

}  // namespace genunc::numeric

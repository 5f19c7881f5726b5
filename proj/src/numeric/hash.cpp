#include "genunc/numeric/hash.hpp"

#include <cstdio>
#include <stdexcept>

namespace genunc::numeric {

namespace {
constexpr std::uint64_t kPrime = 1099511628211ULL;
}

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= kPrime;
  }
}

void Fnv1a::update(std::string_view text) {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

void Fnv1a::update_u64(std::uint64_t v) {
  std::byte buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
  update(std::span<const std::byte>(buf, 8));
}

std::uint64_t fnv1a(std::span<const std::byte> bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.digest();
}

std::uint64_t fnv1a(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.digest();
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() > 16) throw std::invalid_argument("bad hex digest");
  std::uint64_t v = 0;
  for (char c : hex) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw std::invalid_argument("bad hex digest");
  }
  return v;
}

}  // namespace genunc::numeric

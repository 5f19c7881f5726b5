#pragma once

#include <cstdint>
#include <vector>

#include "genunc/numeric/linalg.hpp"

namespace genunc::numeric {

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  bool operator==(const RngState&) const = default;
};

/// Counter-mode SplitMix64 generator.
///
/// Draw number `c` of a stream is `mix64(key(seed) + c * 0x9E3779B97F4A7C15)`,
/// so the full state is the pair (seed, counter) and any draw can be
/// reproduced on any platform without replaying the stream. Normals use the
/// cosine branch of Box-Muller and consume exactly two 64-bit draws each.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(RngState{seed, 0}) {}
  explicit Rng(RngState state);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0();
  double normal();
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream identified by `stream`. Does not advance this one.
  Rng fork(std::uint64_t stream) const;

  RngState state() const { return state_; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  RngState state_;
  std::uint64_t key_;
};

std::uint64_t mix64(std::uint64_t z);

/// n x dim matrix of standard normal draws; advances `state`.
Matrix gaussian_sample(RngState& state, std::size_t n, std::size_t dim);

}  // namespace genunc::numeric

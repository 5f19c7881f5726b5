#include "genunc/numeric/rng.hpp"

#include <cmath>
#include <numbers>

namespace genunc::numeric {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(RngState state) : state_(state), key_(mix64(state.seed)) {}

std::uint64_t Rng::next_u64() {
  ++state_.counter;
  return mix64(key_ + state_.counter * kGamma);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = uniform_open0();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(RngState{mix64(state_.seed ^ mix64(stream + kGamma)), 0});
}

Matrix gaussian_sample(RngState& state, std::size_t n, std::size_t dim) {
  Rng rng(state);
  Matrix out(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) out(i, j) = rng.normal();
  state = rng.state();
  return out;
}

}  // namespace genunc::numeric

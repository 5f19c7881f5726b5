#pragma once

// Brute-force reference implementations used by the unit tests and the
// acceptance runner. Each one is written independently of the library code
// it checks: plain loops, no Eigen expression tricks, no shared helpers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <algorithm>
#include <random>
#include <vector>

#include "genunc/diffusion/checkpoint.hpp"
#include "genunc/diffusion/dataset.hpp"
#include "genunc/diffusion/objectives.hpp"
#include "genunc/numeric/hash.hpp"
#include "genunc/numeric/mlp.hpp"
#include "genunc/numeric/param_vector.hpp"

namespace oracle {

using genunc::numeric::Matrix;
using genunc::numeric::Vector;

inline double dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

/// k-th nearest neighbour distance of every row among the other rows, by full sort.
inline std::vector<double> knn_radii(const Matrix& s, std::size_t k) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    std::vector<double> d;
    for (Eigen::Index j = 0; j < s.rows(); ++j)
      if (j != i) d.push_back(dist(s, i, s, j));
    std::sort(d.begin(), d.end());
    out.push_back(d[k - 1]);
  }
  return out;
}

inline double coverage(const Matrix& queries, const Matrix& support, std::size_t k) {
  auto r = knn_radii(support, k);
  std::size_t inside = 0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    bool hit = false;
    for (Eigen::Index j = 0; j < support.rows(); ++j) hit = hit || dist(queries, i, support, j) <= r[j];
    inside += hit ? 1 : 0;
  }
  return static_cast<double>(inside) / static_cast<double>(queries.rows());
}

inline double realism(const Matrix& x, Eigen::Index i, const Matrix& ref, std::size_t k) {
  auto r = knn_radii(ref, k);
  double best = 0.0;
  for (Eigen::Index j = 0; j < ref.rows(); ++j) {
    double d = dist(x, i, ref, j);
    if (d < 1e-12) d = 1e-12;
    if (r[j] / d > best) best = r[j] / d;
  }
  return best;
}

inline double rarity(const Matrix& x, Eigen::Index i, const Matrix& ref, std::size_t k) {
  auto r = knn_radii(ref, k);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < ref.rows(); ++j)
    if (dist(x, i, ref, j) <= r[j] && r[j] < best) best = r[j];
  return best;
}

/// Two-pass mean then population variance, plus sigma2.
inline void two_pass(const Matrix& e, double sigma2, std::vector<double>& mean, std::vector<double>& var) {
  const auto M = e.rows(), d = e.cols();
  mean.assign(d, 0.0);
  var.assign(d, 0.0);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index m = 0; m < M; ++m) mean[c] += e(m, c);
    mean[c] /= static_cast<double>(M);
    for (Eigen::Index m = 0; m < M; ++m) var[c] += (e(m, c) - mean[c]) * (e(m, c) - mean[c]);
    var[c] = var[c] / static_cast<double>(M) + sigma2;
  }
}

/// Monte Carlo differential entropy of N(0, diag(var)): -mean log density.
inline double mc_entropy(const std::vector<double>& var, std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  double acc = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    double logp = 0.0;
    for (double v : var) {
      double x = std::sqrt(v) * n01(gen);
      logp += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * x * x / v;
    }
    acc -= logp;
  }
  return acc / static_cast<double>(draws);
}

/// Scalar-by-scalar forward pass of the denoiser MLP for one input.
inline std::vector<double> mlp_forward(const genunc::numeric::MlpConfig& cfg, const genunc::numeric::ParamVector& p,
                                       const std::vector<double>& x, double t, int cond = -1,
                                       std::vector<double>* last_hidden = nullptr) {
  const std::size_t half = cfg.time_embed_dim / 2;
  std::vector<double> h(x);
  std::vector<double> emb(cfg.time_embed_dim);
  for (std::size_t i = 0; i < half; ++i) {
    double f = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    emb[i] = std::sin(t * f);
    emb[half + i] = std::cos(t * f);
  }
  if (cond >= 0) {
    auto table = p.block("cond_embed");
    for (std::size_t i = 0; i < emb.size(); ++i) emb[i] += table(cond, static_cast<Eigen::Index>(i));
  }
  h.insert(h.end(), emb.begin(), emb.end());
  auto act = [&](double z) {
    switch (cfg.activation) {
      case genunc::numeric::Activation::relu: return z > 0 ? z : 0.0;
      case genunc::numeric::Activation::silu: return z / (1.0 + std::exp(-z));
      case genunc::numeric::Activation::tanh: return std::tanh(z);
    }
    return 0.0;
  };
  auto layer = [&](const std::string& name, bool activate) {
    auto W = p.block(name + ".weight");
    auto b = p.block(name + ".bias");
    std::vector<double> out(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index o = 0; o < W.rows(); ++o) {
      double z = b(0, o);
      for (Eigen::Index i = 0; i < W.cols(); ++i) z += W(o, i) * h[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(o)] = activate ? act(z) : z;
    }
    h = out;
  };
  for (std::size_t l = 0; l < cfg.hidden_dims.size(); ++l) layer("hidden" + std::to_string(l), true);
  if (last_hidden) *last_hidden = h;
  layer("out", false);
  return h;
}

/// Squared last-layer gradients summed over rows, one scalar forward pass per
/// example. Each row gets the (t, noise) draw keyed by its contents.
inline std::vector<double> last_layer_fisher(const genunc::diffusion::Checkpoint& ck,
                                             const genunc::diffusion::Dataset& data, std::uint64_t seed) {
  const auto& p = ck.sampling_params();
  const auto out_slot = p.slot("out.weight");
  std::vector<double> fisher(out_slot.size() + out_slot.rows, 0.0);
  const genunc::numeric::Rng root(seed);
  for (Eigen::Index r = 0; r < data.x.rows(); ++r) {
    const Matrix row = data.x.row(r);
    genunc::numeric::Fnv1a key;
    key.update(std::as_bytes(std::span(row.data(), static_cast<std::size_t>(row.size()))));
    genunc::numeric::Rng rng = root.fork(key.digest());
    auto draw = genunc::diffusion::draw_diffusion_batch(ck.schedule, row, rng);
    std::vector<double> x{draw.inputs(0, 0), draw.inputs(0, 1)};
    std::vector<double> h;
    auto pred = oracle::mlp_forward(ck.net, p, x, draw.times[0], -1, &h);
    std::size_t k = 0;
    for (std::size_t o = 0; o < pred.size(); ++o) {
      const double dy = 2.0 * (pred[o] - draw.targets(0, static_cast<Eigen::Index>(o)));
      for (double hi : h) {
        fisher[k] += (dy * hi) * (dy * hi);
        ++k;
      }
    }
    for (std::size_t o = 0; o < pred.size(); ++o) {
      const double dy = 2.0 * (pred[o] - draw.targets(0, static_cast<Eigen::Index>(o)));
      fisher[k + o] += dy * dy;
    }
  }
  return fisher;
}

}  // namespace oracle

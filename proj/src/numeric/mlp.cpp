#include "genunc/numeric/mlp.hpp"

#include <cmath>
#include <string>

#include "genunc/error.hpp"
#include "genunc/numeric/rng.hpp"

namespace genunc::numeric {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

void MlpConfig::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("mlp: input/output dims must be positive");
  if (hidden_dims.empty()) throw ConfigError("mlp: at least one hidden layer is required");
  for (auto h : hidden_dims)
    if (h == 0) throw ConfigError("mlp: hidden dims must be positive");
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0)
    throw ConfigError("mlp: time_embed_dim must be positive and even");
}

nlohmann::json MlpConfig::to_json() const {
  return {{"input_dim", input_dim},
          {"hidden_dims", hidden_dims},
          {"output_dim", output_dim},
          {"activation", to_string(activation)},
          {"time_embed_dim", time_embed_dim},
          {"condition_count", condition_count}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.time_embed_dim = j.at("time_embed_dim").get<std::size_t>();
  c.condition_count = j.at("condition_count").get<std::size_t>();
  c.validate();
  return c;
}

Matrix time_embedding(std::span<const double> t, std::size_t dim) {
  const std::size_t half = dim / 2;
  Matrix out(t.size(), dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    for (std::size_t b = 0; b < t.size(); ++b) {
      out(b, i) = std::sin(t[b] * freq);
      out(b, half + i) = std::cos(t[b] * freq);
    }
  }
  return out;
}

namespace {

std::string hidden_name(std::size_t l, const char* part) {
  return "hidden" + std::to_string(l) + "." + part;
}

void apply_activation(Activation a, const Matrix& z, Matrix& h) {
  switch (a) {
    case Activation::relu: h = z.cwiseMax(0.0); break;
    case Activation::silu: h = z.array() / (1.0 + (-z.array()).exp()); break;
    case Activation::tanh: h = z.array().tanh(); break;
  }
}

Matrix activation_derivative(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).cast<double>();
    case Activation::silu: {
      Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 + z.array() * (1.0 - s))).matrix();
    }
    case Activation::tanh: {
      Eigen::ArrayXXd th = z.array().tanh();
      return (1.0 - th * th).matrix();
    }
  }
  return Matrix();
}

}  // namespace

Mlp::Mlp(MlpConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    layout_.push_back(LayerSlot{std::move(name), rows, cols, offset});
    offset += rows * cols;
  };
  if (cfg_.condition_count > 0) add("cond_embed", cfg_.condition_count, cfg_.time_embed_dim);
  std::size_t fan_in = cfg_.input_dim + cfg_.time_embed_dim;
  for (std::size_t l = 0; l < cfg_.hidden_dims.size(); ++l) {
    add(hidden_name(l, "weight"), cfg_.hidden_dims[l], fan_in);
    add(hidden_name(l, "bias"), 1, cfg_.hidden_dims[l]);
    fan_in = cfg_.hidden_dims[l];
  }
  add("out.weight", cfg_.output_dim, fan_in);
  add("out.bias", 1, cfg_.output_dim);
}

std::vector<LayerSlot> Mlp::layout() const { return layout_; }

std::size_t Mlp::last_layer_offset() const { return layout_[layout_.size() - 2].offset; }

std::size_t Mlp::last_layer_size() const {
  return layout_[layout_.size() - 2].size() + layout_.back().size();
}

ParamVector Mlp::init(std::uint64_t seed) const {
  ParamVector p(layout_);
  Rng rng(seed);
  for (const auto& s : layout_) {
    auto blk = p.block(s.name);
    if (s.name == "cond_embed") {
      for (Eigen::Index i = 0; i < blk.size(); ++i) blk.data()[i] = rng.normal();
    } else if (s.name.ends_with(".weight")) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s.cols));
      for (Eigen::Index i = 0; i < blk.size(); ++i) blk.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  return p;
}

void Mlp::check_input(const ParamVector& params, const Matrix& x, std::span<const double> t,
                      std::span<const int> cond) const {
  if (params.layout() != layout_) throw DimensionError("mlp: parameter layout does not match the network");
  if (static_cast<std::size_t>(x.cols()) != cfg_.input_dim)
    throw DimensionError("mlp: layer 'hidden0' expects " + std::to_string(cfg_.input_dim) +
                         " input features, got " + std::to_string(x.cols()));
  if (t.size() != static_cast<std::size_t>(x.rows()))
    throw DimensionError("mlp: time input has " + std::to_string(t.size()) + " entries for " +
                         std::to_string(x.rows()) + " rows");
  if (!cond.empty()) {
    if (cfg_.condition_count == 0) throw DimensionError("mlp: layer 'cond_embed' absent in unconditional net");
    if (cond.size() != t.size()) throw DimensionError("mlp: layer 'cond_embed' got a condition list of wrong length");
    for (int c : cond)
      if (c < 0 || static_cast<std::size_t>(c) >= cfg_.condition_count)
        throw DimensionError("mlp: layer 'cond_embed' has no row " + std::to_string(c));
  }
}

Matrix Mlp::forward(const ParamVector& params, const Matrix& x, std::span<const double> t,
                    std::span<const int> cond, ForwardCache* cache) const {
  check_input(params, x, t, cond);
  const auto B = x.rows();
  Matrix emb = time_embedding(t, cfg_.time_embed_dim);
  if (!cond.empty()) {
    auto table = params.block("cond_embed");
    for (Eigen::Index b = 0; b < B; ++b) emb.row(b) += table.row(cond[static_cast<std::size_t>(b)]);
  }
  Matrix h(B, static_cast<Eigen::Index>(cfg_.input_dim + cfg_.time_embed_dim));
  h << x, emb;

  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->cond.assign(cond.begin(), cond.end());
  }
  for (std::size_t l = 0; l < cfg_.hidden_dims.size(); ++l) {
    auto W = params.block(hidden_name(l, "weight"));
    auto bias = params.block(hidden_name(l, "bias"));
    Matrix z = h * W.transpose();
    z.rowwise() += bias.row(0);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->preacts.push_back(z);
    }
    apply_activation(cfg_.activation, z, h);
  }
  Matrix y = h * params.block("out.weight").transpose();
  y.rowwise() += params.block("out.bias").row(0);
  if (cache) {
    cache->inputs.push_back(std::move(h));
    cache->params_fingerprint = params.fingerprint();
    cache->valid = true;
  }
  return y;
}

Vector Mlp::forward_one(const ParamVector& params, const Vector& x, double t, std::optional<int> cond) const {
  Matrix xm = x.transpose();
  const double ts[1] = {t};
  if (cond) {
    const int cs[1] = {*cond};
    return forward(params, xm, ts, cs).row(0).transpose();
  }
  return forward(params, xm, ts).row(0).transpose();
}

ParamVector Mlp::backward(const ParamVector& params, const ForwardCache& cache, const Matrix& dy) const {
  if (!cache.valid || cache.inputs.size() != cfg_.hidden_dims.size() + 1)
    throw NumericError("mlp backward: no forward cache");
  if (cache.params_fingerprint != params.fingerprint())
    throw NumericError("mlp backward: stale forward cache (parameters changed since forward)");
  const Matrix& h_last = cache.inputs.back();
  if (dy.rows() != h_last.rows() || static_cast<std::size_t>(dy.cols()) != cfg_.output_dim)
    throw DimensionError("mlp backward: layer 'out' upstream gradient has wrong shape");

  ParamVector grad(layout_);
  grad.block("out.weight") = dy.transpose() * h_last;
  grad.block("out.bias") = dy.colwise().sum();
  Matrix dh = dy * params.block("out.weight");
  for (std::size_t li = cfg_.hidden_dims.size(); li-- > 0;) {
    Matrix dz = dh.cwiseProduct(activation_derivative(cfg_.activation, cache.preacts[li]));
    grad.block(hidden_name(li, "weight")) = dz.transpose() * cache.inputs[li];
    grad.block(hidden_name(li, "bias")) = dz.colwise().sum();
    dh = dz * params.block(hidden_name(li, "weight"));
  }
  if (!cache.cond.empty()) {
    auto table = grad.block("cond_embed");
    const auto in = static_cast<Eigen::Index>(cfg_.input_dim);
    const auto E = static_cast<Eigen::Index>(cfg_.time_embed_dim);
    for (Eigen::Index b = 0; b < dh.rows(); ++b)
      table.row(cache.cond[static_cast<std::size_t>(b)]) += dh.row(b).segment(in, E);
  }
  return grad;
}

Matrix Mlp::last_layer_per_example_grads(const ForwardCache& cache, const Matrix& dy) const {
  if (!cache.valid) throw NumericError("mlp: no forward cache");
  const Matrix& h = cache.inputs.back();
  const auto B = h.rows();
  const auto H = h.cols();
  const auto O = static_cast<Eigen::Index>(cfg_.output_dim);
  if (dy.rows() != B || dy.cols() != O) throw DimensionError("mlp: layer 'out' upstream gradient has wrong shape");
  Matrix g(B, O * H + O);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index o = 0; o < O; ++o) g.row(b).segment(o * H, H) = dy(b, o) * h.row(b);
    g.row(b).tail(O) = dy.row(b);
  }
  return g;
}

}  // namespace genunc::numeric

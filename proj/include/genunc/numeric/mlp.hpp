#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genunc/numeric/linalg.hpp"
#include "genunc/numeric/param_vector.hpp"

namespace genunc::numeric {

enum class Activation { relu, silu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpConfig {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden_dims = {128, 128, 128};
  std::size_t output_dim = 2;
  Activation activation = Activation::silu;
  std::size_t time_embed_dim = 32;
  std::size_t condition_count = 0;  // 0 = unconditional

  void validate() const;
  nlohmann::json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);
  bool operator==(const MlpConfig&) const = default;
};

/// Sinusoidal embedding: first half sin(t * f_i), second half cos(t * f_i),
/// f_i = 10000^(-i / (dim/2)).
Matrix time_embedding(std::span<const double> t, std::size_t dim);

/// Activations saved by a forward pass, consumed by backward.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each linear layer (hidden..., out)
  std::vector<Matrix> preacts;      // pre-activation of each hidden layer
  std::vector<int> cond;
  std::uint64_t params_fingerprint = 0;
  bool valid = false;
};

/// Multilayer perceptron denoiser. The network input is the data vector
/// concatenated with (time embedding + condition embedding). Layer names:
/// `cond_embed` (when conditional), `hidden<i>.weight/.bias`, `out.weight/.bias`.
/// The `out.*` pair is the last layer and occupies the tail of the layout.
class Mlp {
 public:
  explicit Mlp(MlpConfig cfg);

  const MlpConfig& config() const { return cfg_; }
  std::vector<LayerSlot> layout() const;

  /// Kaiming-uniform fan-in weights, zero biases, N(0,1) condition embeddings.
  ParamVector init(std::uint64_t seed) const;

  /// Batched forward. `x` is B x input_dim, `t` and (optionally) `cond` have B
  /// entries; an empty `cond` span means unconditional.
  Matrix forward(const ParamVector& params, const Matrix& x, std::span<const double> t,
                 std::span<const int> cond = {}, ForwardCache* cache = nullptr) const;

  Vector forward_one(const ParamVector& params, const Vector& x, double t,
                     std::optional<int> cond = std::nullopt) const;

  /// Gradient of sum_b <dy_b, f(x_b)> with respect to every parameter.
  ParamVector backward(const ParamVector& params, const ForwardCache& cache,
                       const Matrix& dy) const;

  /// Per-example gradients restricted to the last layer: row b holds
  /// d<dy_b, f(x_b)>/d(out.weight, out.bias) flattened in layout order.
  Matrix last_layer_per_example_grads(const ForwardCache& cache, const Matrix& dy) const;

  /// [offset, offset + length) of the last layer inside the flat vector.
  std::size_t last_layer_offset() const;
  std::size_t last_layer_size() const;
  std::vector<std::string> last_layer_names() const { return {"out.weight", "out.bias"}; }

 private:
  void check_input(const ParamVector& params, const Matrix& x, std::span<const double> t,
                   std::span<const int> cond) const;

  MlpConfig cfg_;
  std::vector<LayerSlot> layout_;
};

}  // namespace genunc::numeric

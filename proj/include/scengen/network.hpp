#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scengen/tensor.hpp"

namespace scengen::nn {

enum class LayerKind { dense, conv1d, batchnorm, relu, leakyrelu, identity };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

/// One layer of a feed-forward network. Tensors are flat per sample;
/// conv1d interprets its input as (channels, length) row-major.
struct LayerSpec {
  LayerKind kind = LayerKind::identity;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  // conv1d only
  std::size_t in_channels = 0;
  std::size_t in_length = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_width = 0;
  std::size_t stride = 0;

  // leakyrelu only
  double leak = 0.2;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv1d(std::size_t in_channels, std::size_t in_length,
                          std::size_t out_channels, std::size_t kernel_width,
                          std::size_t stride);
  static LayerSpec batchnorm(std::size_t dim);
  static LayerSpec relu(std::size_t dim);
  static LayerSpec leakyrelu(std::size_t dim, double leak = 0.2);
  static LayerSpec identity(std::size_t dim);

  std::size_t conv_out_length() const;
};

/// Ordered layer list; consecutive dims must chain.
struct NetworkSpec {
  std::vector<LayerSpec> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;

  /// Throws ShapeError/ConfigError on inconsistent structure.
  void validate() const;
};

/// Weight and bias tensors per layer, aligned with NetworkSpec.layers.
/// Layers without parameters hold empty tensors. For batchnorm the
/// weight is the affine scale and the bias is the affine shift.
struct LayerParams {
  Tensor weight;
  Tensor bias;
};

struct ParameterSet {
  std::vector<LayerParams> layers;

  bool all_finite() const;
  /// Applies fn to every parameter tensor in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& lp : layers) {
      if (lp.weight.numel() > 0) fn(lp.weight);
      if (lp.bias.numel() > 0) fn(lp.bias);
    }
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& lp : layers) {
      if (lp.weight.numel() > 0) fn(lp.weight);
      if (lp.bias.numel() > 0) fn(lp.bias);
    }
  }
};

/// Gradients have the same layout as the parameters they refer to.
using ParamGrads = ParameterSet;

enum class Mode { training, frozen };

/// Running statistics for every batchnorm layer (empty entries for
/// other kinds). Frozen mode normalizes with these; training mode
/// normalizes with batch statistics and folds them into the running
/// values by exponential moving average.
struct BatchNormState {
  struct LayerState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    bool initialized = false;
  };
  std::vector<LayerState> layers;
  double decay = 0.99;
  double epsilon = 1e-10;
};

/// Per-layer cache recorded by forward, sufficient for backward.
struct Tape {
  struct LayerRecord {
    Tensor input;              // dense/conv1d/relu/leakyrelu
    Tensor xhat;               // batchnorm: normalized value
    std::vector<double> inv_std;  // batchnorm: 1/sqrt(var + eps)
    Mode mode = Mode::frozen;
  };
  std::size_t batch = 0;
  std::vector<LayerRecord> layers;
};

/// Gaussian init: dense/conv weights ~ N(0, 0.02), biases zero,
/// batchnorm scale ~ N(1, 0.02) with zero shift. Deterministic in the
/// seed.
ParameterSet init_weights(const NetworkSpec& spec, std::uint64_t seed);

/// Zero-filled parameter layout matching spec (gradient accumulators,
/// optimizer state).
ParameterSet zeros_like_params(const NetworkSpec& spec);

/// Running statistics sized for spec's batchnorm layers.
BatchNormState init_batchnorm(const NetworkSpec& spec);

/// Runs the network on a batch (rows) or a single flat sample.
/// In training mode batch statistics drive the batchnorm layers and
/// `bn` running statistics are updated; in frozen mode `bn` is
/// read-only and the call is pure. Pass `tape` to enable backward.
Tensor forward(const NetworkSpec& spec, const ParameterSet& params,
               BatchNormState& bn, const Tensor& input, Mode mode,
               Tape* tape = nullptr);

/// Frozen-mode overload for const contexts (thread-safe over shared
/// parameters).
Tensor forward_frozen(const NetworkSpec& spec, const ParameterSet& params,
                      const BatchNormState& bn, const Tensor& input,
                      Tape* tape = nullptr);

struct BackwardResult {
  ParamGrads param_grads;
  Tensor input_grad;
};

/// Reverse pass over a recorded tape. `upstream` must match the
/// forward output shape. Returns gradients with respect to every
/// parameter and to the input.
BackwardResult backward(const NetworkSpec& spec, const ParameterSet& params,
                        const Tape& tape, const Tensor& upstream);

}  // namespace scengen::nn

#include "scengen/network.hpp"

#include <cmath>
#include <string>

#include "scengen/common.hpp"

namespace scengen::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::leakyrelu: return "leakyrelu";
    case LayerKind::identity: return "identity";
  }
  throw ConfigError("to_string: unknown layer kind");
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "conv1d") return LayerKind::conv1d;
  if (name == "batchnorm") return LayerKind::batchnorm;
  if (name == "relu") return LayerKind::relu;
  if (name == "leakyrelu") return LayerKind::leakyrelu;
  if (name == "identity") return LayerKind::identity;
  throw ConfigError("unknown layer kind: " + name);
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in_dim = in;
  s.out_dim = out;
  return s;
}

LayerSpec LayerSpec::conv1d(std::size_t in_channels, std::size_t in_length,
                            std::size_t out_channels, std::size_t kernel_width,
                            std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.in_channels = in_channels;
  s.in_length = in_length;
  s.out_channels = out_channels;
  s.kernel_width = kernel_width;
  s.stride = stride;
  s.in_dim = in_channels * in_length;
  s.out_dim = out_channels * s.conv_out_length();
  return s;
}

LayerSpec LayerSpec::batchnorm(std::size_t dim) {
  LayerSpec s;
  s.kind = LayerKind::batchnorm;
  s.in_dim = dim;
  s.out_dim = dim;
  return s;
}

LayerSpec LayerSpec::relu(std::size_t dim) {
  LayerSpec s;
  s.kind = LayerKind::relu;
  s.in_dim = dim;
  s.out_dim = dim;
  return s;
}

LayerSpec LayerSpec::leakyrelu(std::size_t dim, double leak) {
  LayerSpec s;
  s.kind = LayerKind::leakyrelu;
  s.in_dim = dim;
  s.out_dim = dim;
  s.leak = leak;
  return s;
}

LayerSpec LayerSpec::identity(std::size_t dim) {
  LayerSpec s;
  s.kind = LayerKind::identity;
  s.in_dim = dim;
  s.out_dim = dim;
  return s;
}

std::size_t LayerSpec::conv_out_length() const {
  if (kernel_width == 0 || stride == 0 || in_length < kernel_width) {
    throw ShapeError("conv1d: kernel width " + std::to_string(kernel_width) +
                     " does not fit input length " + std::to_string(in_length));
  }
  return (in_length - kernel_width) / stride + 1;
}

std::size_t NetworkSpec::input_dim() const {
  if (layers.empty()) throw ConfigError("NetworkSpec: no layers");
  return layers.front().in_dim;
}

std::size_t NetworkSpec::output_dim() const {
  if (layers.empty()) throw ConfigError("NetworkSpec: no layers");
  return layers.back().out_dim;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("NetworkSpec: no layers");
  if (layers.front().kind == LayerKind::batchnorm) {
    throw ConfigError("NetworkSpec: batchnorm may not precede the raw input");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_dim == 0 || l.out_dim == 0) {
      throw ShapeError("layer " + std::to_string(i) + ": zero dimension");
    }
    if (i > 0 && layers[i - 1].out_dim != l.in_dim) {
      throw ShapeError("layer " + std::to_string(i) + ": in_dim " +
                       std::to_string(l.in_dim) + " does not chain with previous out_dim " +
                       std::to_string(layers[i - 1].out_dim));
    }
    switch (l.kind) {
      case LayerKind::conv1d:
        if (l.in_channels * l.in_length != l.in_dim ||
            l.out_channels * l.conv_out_length() != l.out_dim) {
          throw ShapeError("layer " + std::to_string(i) + ": conv1d geometry inconsistent");
        }
        break;
      case LayerKind::leakyrelu:
        if (!(l.leak > 0.0 && l.leak < 1.0)) {
          throw ConfigError("layer " + std::to_string(i) + ": leak must lie in (0,1)");
        }
        break;
      default:
        break;
    }
  }
}

ParameterSet init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParameterSet params;
  params.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    LayerParams& lp = params.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        lp.weight = Tensor::zeros({l.out_dim, l.in_dim});
        for (double& w : lp.weight.data) w = rng.normal(0.0, 0.02);
        lp.bias = Tensor::zeros({l.out_dim});
        break;
      case LayerKind::conv1d:
        lp.weight = Tensor::zeros({l.out_channels, l.in_channels, l.kernel_width});
        for (double& w : lp.weight.data) w = rng.normal(0.0, 0.02);
        lp.bias = Tensor::zeros({l.out_channels});
        break;
      case LayerKind::batchnorm:
        lp.weight = Tensor::zeros({l.in_dim});
        for (double& w : lp.weight.data) w = rng.normal(1.0, 0.02);
        lp.bias = Tensor::zeros({l.in_dim});
        break;
      default:
        break;
    }
  }
  return params;
}

ParameterSet zeros_like_params(const NetworkSpec& spec) {
  ParameterSet params;
  params.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    LayerParams& lp = params.layers[i];
    switch (l.kind) {
      case LayerKind::dense:
        lp.weight = Tensor::zeros({l.out_dim, l.in_dim});
        lp.bias = Tensor::zeros({l.out_dim});
        break;
      case LayerKind::conv1d:
        lp.weight = Tensor::zeros({l.out_channels, l.in_channels, l.kernel_width});
        lp.bias = Tensor::zeros({l.out_channels});
        break;
      case LayerKind::batchnorm:
        lp.weight = Tensor::zeros({l.in_dim});
        lp.bias = Tensor::zeros({l.in_dim});
        break;
      default:
        break;
    }
  }
  return params;
}

BatchNormState init_batchnorm(const NetworkSpec& spec) {
  BatchNormState bn;
  bn.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::batchnorm) {
      bn.layers[i].running_mean.assign(spec.layers[i].in_dim, 0.0);
      bn.layers[i].running_var.assign(spec.layers[i].in_dim, 1.0);
    }
  }
  return bn;
}

bool ParameterSet::all_finite() const {
  bool ok = true;
  for_each([&](const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

namespace {

void check_param_layout(const NetworkSpec& spec, const ParameterSet& params) {
  if (params.layers.size() != spec.layers.size()) {
    throw ShapeError("ParameterSet layer count does not match NetworkSpec");
  }
}

Tensor dense_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x) {
  const std::size_t m = x.dim(0);
  Tensor y = Tensor::zeros({m, l.out_dim});
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = &x.data[r * l.in_dim];
    double* yr = &y.data[r * l.out_dim];
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      const double* wo = &p.weight.data[o * l.in_dim];
      double acc = p.bias.data[o];
      for (std::size_t i = 0; i < l.in_dim; ++i) acc += wo[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

Tensor conv_forward(const LayerSpec& l, const LayerParams& p, const Tensor& x) {
  const std::size_t m = x.dim(0);
  const std::size_t lout = l.conv_out_length();
  Tensor y = Tensor::zeros({m, l.out_dim});
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = &x.data[r * l.in_dim];
    double* yr = &y.data[r * l.out_dim];
    for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
      const double bias = p.bias.data[oc];
      for (std::size_t t = 0; t < lout; ++t) {
        double acc = bias;
        for (std::size_t ic = 0; ic < l.in_channels; ++ic) {
          const double* w = &p.weight.data[(oc * l.in_channels + ic) * l.kernel_width];
          const double* xc = &xr[ic * l.in_length + t * l.stride];
          for (std::size_t j = 0; j < l.kernel_width; ++j) acc += w[j] * xc[j];
        }
        yr[oc * lout + t] = acc;
      }
    }
  }
  return y;
}

}  // namespace

Tensor forward(const NetworkSpec& spec, const ParameterSet& params,
               BatchNormState& bn, const Tensor& input, Mode mode, Tape* tape) {
  check_param_layout(spec, params);
  if (bn.layers.size() != spec.layers.size()) {
    throw ShapeError("BatchNormState layer count does not match NetworkSpec");
  }
  const bool flat = input.rank() == 1;
  if (flat && input.numel() != spec.input_dim()) {
    throw ShapeError("forward: input length does not match network input_dim");
  }
  if (!flat && (input.rank() != 2 || input.dim(1) != spec.input_dim())) {
    throw ShapeError("forward: input must be (batch, input_dim)");
  }
  require_finite(input, "forward input");

  const std::size_t m = flat ? 1 : input.dim(0);
  Tensor x = flat ? Tensor({m, input.numel()}, input.data) : input;
  if (tape != nullptr) {
    tape->batch = m;
    tape->layers.assign(spec.layers.size(), {});
  }

  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& l = spec.layers[li];
    const LayerParams& p = params.layers[li];
    Tape::LayerRecord* rec = tape ? &tape->layers[li] : nullptr;
    if (rec != nullptr) rec->mode = mode;

    switch (l.kind) {
      case LayerKind::dense: {
        if (rec != nullptr) rec->input = x;
        x = dense_forward(l, p, x);
        break;
      }
      case LayerKind::conv1d: {
        if (rec != nullptr) rec->input = x;
        x = conv_forward(l, p, x);
        break;
      }
      case LayerKind::relu: {
        if (rec != nullptr) rec->input = x;
        for (double& v : x.data) {
          if (v < 0.0) v = 0.0;
        }
        break;
      }
      case LayerKind::leakyrelu: {
        if (rec != nullptr) rec->input = x;
        for (double& v : x.data) {
          if (v < 0.0) v *= l.leak;
        }
        break;
      }
      case LayerKind::identity:
        break;
      case LayerKind::batchnorm: {
        const std::size_t d = l.in_dim;
        std::vector<double> mean(d), var(d);
        BatchNormState::LayerState& st = bn.layers[li];
        if (mode == Mode::training) {
          for (std::size_t f = 0; f < d; ++f) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) s += x.data[r * d + f];
            mean[f] = s / static_cast<double>(m);
          }
          for (std::size_t f = 0; f < d; ++f) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
              double c = x.data[r * d + f] - mean[f];
              s += c * c;
            }
            var[f] = s / static_cast<double>(m);
          }
          if (!st.initialized) {
            st.running_mean = mean;
            st.running_var = var;
            st.initialized = true;
          } else {
            for (std::size_t f = 0; f < d; ++f) {
              st.running_mean[f] = bn.decay * st.running_mean[f] + (1.0 - bn.decay) * mean[f];
              st.running_var[f] = bn.decay * st.running_var[f] + (1.0 - bn.decay) * var[f];
            }
          }
        } else {
          mean = st.running_mean;
          var = st.running_var;
        }
        std::vector<double> inv_std(d);
        for (std::size_t f = 0; f < d; ++f) {
          inv_std[f] = 1.0 / std::sqrt(var[f] + bn.epsilon);
        }
        Tensor xhat = Tensor::zeros({m, d});
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t f = 0; f < d; ++f) {
            xhat.data[r * d + f] = (x.data[r * d + f] - mean[f]) * inv_std[f];
          }
        }
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t f = 0; f < d; ++f) {
            x.data[r * d + f] = p.weight.data[f] * xhat.data[r * d + f] + p.bias.data[f];
          }
        }
        if (rec != nullptr) {
          rec->xhat = std::move(xhat);
          rec->inv_std = std::move(inv_std);
        }
        break;
      }
    }
  }

  if (flat) return Tensor({spec.output_dim()}, std::move(x.data));
  return x;
}

Tensor forward_frozen(const NetworkSpec& spec, const ParameterSet& params,
                      const BatchNormState& bn, const Tensor& input, Tape* tape) {
  // Frozen mode never writes to bn; the cast keeps one implementation.
  return forward(spec, params, const_cast<BatchNormState&>(bn), input, Mode::frozen, tape);
}

BackwardResult backward(const NetworkSpec& spec, const ParameterSet& params,
                        const Tape& tape, const Tensor& upstream) {
  check_param_layout(spec, params);
  if (tape.layers.size() != spec.layers.size()) {
    throw ShapeError("backward: tape does not match NetworkSpec");
  }
  const bool flat = upstream.rank() == 1;
  const std::size_t m = tape.batch;
  if (flat && (m != 1 || upstream.numel() != spec.output_dim())) {
    throw ShapeError("backward: upstream shape does not match output");
  }
  if (!flat && (upstream.rank() != 2 || upstream.dim(0) != m ||
                upstream.dim(1) != spec.output_dim())) {
    throw ShapeError("backward: upstream shape does not match output");
  }

  BackwardResult res;
  res.param_grads = zeros_like_params(spec);
  Tensor g = flat ? Tensor({m, upstream.numel()}, upstream.data) : upstream;

  for (std::size_t idx = spec.layers.size(); idx-- > 0;) {
    const LayerSpec& l = spec.layers[idx];
    const LayerParams& p = params.layers[idx];
    const Tape::LayerRecord& rec = tape.layers[idx];
    LayerParams& grads = res.param_grads.layers[idx];

    switch (l.kind) {
      case LayerKind::dense: {
        const Tensor& x = rec.input;
        Tensor gx = Tensor::zeros({m, l.in_dim});
        for (std::size_t r = 0; r < m; ++r) {
          const double* gr = &g.data[r * l.out_dim];
          const double* xr = &x.data[r * l.in_dim];
          double* gxr = &gx.data[r * l.in_dim];
          for (std::size_t o = 0; o < l.out_dim; ++o) {
            const double go = gr[o];
            grads.bias.data[o] += go;
            double* wg = &grads.weight.data[o * l.in_dim];
            const double* wo = &p.weight.data[o * l.in_dim];
            for (std::size_t i = 0; i < l.in_dim; ++i) {
              wg[i] += go * xr[i];
              gxr[i] += go * wo[i];
            }
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::conv1d: {
        const Tensor& x = rec.input;
        const std::size_t lout = l.conv_out_length();
        Tensor gx = Tensor::zeros({m, l.in_dim});
        for (std::size_t r = 0; r < m; ++r) {
          const double* gr = &g.data[r * l.out_dim];
          const double* xr = &x.data[r * l.in_dim];
          double* gxr = &gx.data[r * l.in_dim];
          for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
            for (std::size_t t = 0; t < lout; ++t) {
              const double go = gr[oc * lout + t];
              grads.bias.data[oc] += go;
              for (std::size_t ic = 0; ic < l.in_channels; ++ic) {
                const std::size_t wbase = (oc * l.in_channels + ic) * l.kernel_width;
                const std::size_t xbase = ic * l.in_length + t * l.stride;
                for (std::size_t j = 0; j < l.kernel_width; ++j) {
                  grads.weight.data[wbase + j] += go * xr[xbase + j];
                  gxr[xbase + j] += go * p.weight.data[wbase + j];
                }
              }
            }
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::relu: {
        const Tensor& x = rec.input;
        // Subgradient at exactly zero is zero.
        for (std::size_t i = 0; i < g.numel(); ++i) {
          if (x.data[i] <= 0.0) g.data[i] = 0.0;
        }
        break;
      }
      case LayerKind::leakyrelu: {
        const Tensor& x = rec.input;
        for (std::size_t i = 0; i < g.numel(); ++i) {
          if (x.data[i] <= 0.0) g.data[i] *= l.leak;
        }
        break;
      }
      case LayerKind::identity:
        break;
      case LayerKind::batchnorm: {
        const std::size_t d = l.in_dim;
        const Tensor& xhat = rec.xhat;
        Tensor gx = Tensor::zeros({m, d});
        if (rec.mode == Mode::training) {
          const double mf = static_cast<double>(m);
          for (std::size_t f = 0; f < d; ++f) {
            const double scale = p.weight.data[f];
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
              const double gy = g.data[r * d + f];
              sum_gy += gy;
              sum_gy_xhat += gy * xhat.data[r * d + f];
            }
            grads.weight.data[f] += sum_gy_xhat;
            grads.bias.data[f] += sum_gy;
            const double k = rec.inv_std[f] * scale / mf;
            for (std::size_t r = 0; r < m; ++r) {
              const double gy = g.data[r * d + f];
              gx.data[r * d + f] =
                  k * (mf * gy - sum_gy - xhat.data[r * d + f] * sum_gy_xhat);
            }
          }
        } else {
          for (std::size_t f = 0; f < d; ++f) {
            const double factor = p.weight.data[f] * rec.inv_std[f];
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
              const double gy = g.data[r * d + f];
              sum_gy += gy;
              sum_gy_xhat += gy * xhat.data[r * d + f];
              gx.data[r * d + f] = gy * factor;
            }
            grads.weight.data[f] += sum_gy_xhat;
            grads.bias.data[f] += sum_gy;
          }
        }
        g = std::move(gx);
        break;
      }
    }
  }

  if (flat) {
    res.input_grad = Tensor({spec.input_dim()}, std::move(g.data));
  } else {
    res.input_grad = std::move(g);
  }
  return res;
}

}  // namespace scengen::nn

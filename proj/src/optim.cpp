#include "scengen/optim.hpp"

#include <cmath>

#include "scengen/common.hpp"

namespace scengen::nn {

namespace {

void rmsprop_update(double* theta, const double* g, double* acc, std::size_t n,
                    double rho, double eps, double lr) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] = rho * acc[i] + (1.0 - rho) * g[i] * g[i];
    theta[i] -= lr * g[i] / std::sqrt(acc[i] + eps);
  }
}

}  // namespace

RmsPropState RmsPropState::for_network(const NetworkSpec& spec) {
  RmsPropState st;
  st.acc = zeros_like_params(spec);
  return st;
}

void rmsprop_step(ParameterSet& params, const ParamGrads& grads,
                  RmsPropState& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("rmsprop_step: learning rate must be > 0");
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != state.acc.layers.size()) {
    throw ShapeError("rmsprop_step: mismatched parameter layout");
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    LayerParams& p = params.layers[i];
    const LayerParams& g = grads.layers[i];
    LayerParams& a = state.acc.layers[i];
    if (!p.weight.same_shape(g.weight) || !p.bias.same_shape(g.bias)) {
      throw ShapeError("rmsprop_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    rmsprop_update(p.weight.data.data(), g.weight.data.data(), a.weight.data.data(),
                   p.weight.numel(), state.rho, state.epsilon, learning_rate);
    rmsprop_update(p.bias.data.data(), g.bias.data.data(), a.bias.data.data(),
                   p.bias.numel(), state.rho, state.epsilon, learning_rate);
  }
}

void rmsprop_step(std::vector<double>& x, const std::vector<double>& grad,
                  RmsPropVecState& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("rmsprop_step: learning rate must be > 0");
  if (state.acc.empty()) state.acc.assign(x.size(), 0.0);
  if (grad.size() != x.size() || state.acc.size() != x.size()) {
    throw ShapeError("rmsprop_step: vector size mismatch");
  }
  rmsprop_update(x.data(), grad.data(), state.acc.data(), x.size(), state.rho,
                 state.epsilon, learning_rate);
}

void momentum_step(std::vector<double>& x, const std::vector<double>& grad,
                   MomentumState& state, double learning_rate, double mu) {
  if (!(learning_rate > 0.0)) throw ConfigError("momentum_step: learning rate must be > 0");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("momentum_step: mu must lie in [0,1)");
  if (state.velocity.empty()) state.velocity.assign(x.size(), 0.0);
  if (grad.size() != x.size() || state.velocity.size() != x.size()) {
    throw ShapeError("momentum_step: vector size mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.velocity[i] = mu * state.velocity[i] + grad[i];
    x[i] -= learning_rate * state.velocity[i];
  }
}

void clip_parameters(ParameterSet& params, double c) {
  if (c < 0.0) throw ConfigError("clip_parameters: c must be nonnegative");
  params.for_each([c](Tensor& t) { clip_values_inplace(t, -c, c); });
}

double max_abs_parameter(const ParameterSet& params) {
  double m = 0.0;
  params.for_each([&m](const Tensor& t) {
    for (double v : t.data) m = std::max(m, std::abs(v));
  });
  return m;
}

}  // namespace scengen::nn

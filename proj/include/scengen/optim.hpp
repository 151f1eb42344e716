#pragma once

#include <vector>

#include "scengen/network.hpp"

namespace scengen::nn {

/// Running squared-gradient accumulator per parameter.
/// acc <- rho*acc + (1-rho)*g^2; theta <- theta - lr*g/sqrt(acc + eps).
struct RmsPropState {
  ParameterSet acc;
  double rho = 0.9;
  double epsilon = 1e-8;

  static RmsPropState for_network(const NetworkSpec& spec);
};

void rmsprop_step(ParameterSet& params, const ParamGrads& grads,
                  RmsPropState& state, double learning_rate);

/// Scalar-vector RMSProp, sharing the same update rule. Used where
/// the variable is a flat vector rather than network parameters.
struct RmsPropVecState {
  std::vector<double> acc;
  double rho = 0.9;
  double epsilon = 1e-8;
};

void rmsprop_step(std::vector<double>& x, const std::vector<double>& grad,
                  RmsPropVecState& state, double learning_rate);

/// Classical momentum: v <- mu*v + g; x <- x - lr*v.
struct MomentumState {
  std::vector<double> velocity;
};

void momentum_step(std::vector<double>& x, const std::vector<double>& grad,
                   MomentumState& state, double learning_rate, double mu);

/// Clamps every parameter tensor into [-c, c].
void clip_parameters(ParameterSet& params, double c);

/// Largest absolute parameter value.
double max_abs_parameter(const ParameterSet& params);

}  // namespace scengen::nn

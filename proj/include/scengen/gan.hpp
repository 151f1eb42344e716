#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scengen/common.hpp"
#include "scengen/network.hpp"
#include "scengen/optim.hpp"

namespace scengen::gan {

/// Generator/discriminator pair over fixed window geometry. The
/// generator maps latent vectors in [-1,1]^latent_dim to windows of
/// length h+k+1; the discriminator scores a window with one raw
/// affine output (no squashing).
struct GanModel {
  nn::NetworkSpec gen_spec;
  nn::NetworkSpec dis_spec;
  nn::ParameterSet gen_params;
  nn::ParameterSet dis_params;
  nn::BatchNormState gen_bn;
  nn::BatchNormState dis_bn;
  std::size_t latent_dim = 0;
  std::size_t history_len = 0;  // h
  std::size_t horizon = 0;      // k

  std::size_t window_len() const { return history_len + horizon + 1; }
  void validate() const;
};

/// Default generator: two dense layers fanning out to a channel grid,
/// then two stride-1 convolutions narrowing to the window length.
/// Hidden layers are batch-normalized and ReLU-activated; the output
/// layer is affine.
nn::NetworkSpec make_generator_spec(std::size_t latent_dim, std::size_t window_len,
                                    std::size_t channels = 8);

/// Default discriminator: two strided convolutions then two dense
/// layers down to one score. Leaky-ReLU activations, batchnorm on the
/// hidden layers.
nn::NetworkSpec make_discriminator_spec(std::size_t window_len, std::size_t channels = 8,
                                        std::size_t hidden = 64, double leak = 0.2);

/// Dense-only variants for small fixtures.
nn::NetworkSpec make_dense_generator_spec(std::size_t latent_dim, std::size_t window_len,
                                          std::size_t hidden = 32);
nn::NetworkSpec make_dense_discriminator_spec(std::size_t window_len,
                                              std::size_t hidden = 32, double leak = 0.2);

/// Assembles a model with freshly initialized parameters.
GanModel make_model(std::size_t history_len, std::size_t horizon, std::uint64_t seed,
                    bool convolutional = true);

struct TrainConfig {
  double learning_rate = 5e-5;
  double clip = 0.01;
  std::size_t batch_size = 64;
  std::size_t n_discri = 4;
  std::size_t iterations = 0;  // generator iterations, total
  std::uint64_t seed = 0;
  // Optional early stop: halts once a moving average of
  // |E D(x) - E D(G(z))| over `early_stop_window` iterations stays
  // below `early_stop_threshold`. Window 0 disables it.
  std::size_t early_stop_window = 0;
  double early_stop_threshold = 0.0;

  void validate() const;
};

struct TrainRecord {
  std::size_t iteration = 0;
  double mean_d_real = 0.0;  // E[D(X)]
  double mean_d_fake = 0.0;  // E[D(G(Z))]
  double loss_d = 0.0;
  double loss_g = 0.0;
  double wall_ms = 0.0;
};

using TrainLog = std::vector<TrainRecord>;

/// Optimizer and sampler state carried across checkpoint/resume.
struct TrainState {
  nn::RmsPropState dis_opt;
  nn::RmsPropState gen_opt;
  std::string rng_state;
  std::size_t next_iteration = 0;
  bool initialized = false;
};

/// Observation points inside the training loop.
struct TrainHooks {
  /// After each discriminator update (post-clip).
  std::function<void(const GanModel&, std::size_t iteration, std::size_t d_step)>
      after_discriminator_step;
  /// After each generator update.
  std::function<void(const GanModel&, std::size_t iteration, const TrainRecord&)>
      after_generator_step;
};

/// Batch of i.i.d. Unif(-1,1) latent vectors, shape (m, dim).
nn::Tensor sample_noise(std::size_t m, std::size_t dim, Rng& rng);

/// L_D = -mean(D(x)) + mean(D(G(z))). Pure (frozen batchnorm).
double discriminator_loss(const GanModel& model, const nn::Tensor& x_batch,
                          const nn::Tensor& z_batch);

/// L_G = -mean(D(G(z))). Pure (frozen batchnorm).
double generator_loss(const GanModel& model, const nn::Tensor& z_batch);

/// Minimax value V(G,D) = -L_D.
double game_value(const GanModel& model, const nn::Tensor& x_batch,
                  const nn::Tensor& z_batch);

/// Runs the nested loop: per generator iteration, n_discri
/// discriminator RMSProp updates with weight clipping, then one
/// generator RMSProp update. Windows are flat vectors of length
/// h+k+1 with values in [0,1]. Appends to `log`. When `state` is a
/// resumed TrainState the run continues where the checkpoint left
/// off; `config.iterations` is always the total budget.
void train(GanModel& model, const std::vector<std::vector<double>>& windows,
           const TrainConfig& config, TrainLog& log,
           const TrainHooks* hooks = nullptr, TrainState* state = nullptr);

/// n generator samples (frozen mode), shape (n, h+k+1).
nn::Tensor generate(const GanModel& model, std::size_t n, Rng& rng);

}  // namespace scengen::gan

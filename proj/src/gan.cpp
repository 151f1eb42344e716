#include "scengen/gan.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <string>

namespace scengen::gan {

using nn::LayerSpec;
using nn::Mode;
using nn::NetworkSpec;
using nn::Tensor;

void GanModel::validate() const {
  gen_spec.validate();
  dis_spec.validate();
  if (latent_dim == 0 || horizon == 0) {
    throw ConfigError("GanModel: latent_dim and horizon must be positive");
  }
  if (gen_spec.input_dim() != latent_dim) {
    throw ShapeError("GanModel: generator input_dim != latent_dim");
  }
  if (gen_spec.output_dim() != window_len() || dis_spec.input_dim() != window_len()) {
    throw ShapeError("GanModel: window length does not match network geometry");
  }
  if (dis_spec.output_dim() != 1) {
    throw ShapeError("GanModel: discriminator must emit one score");
  }
}

NetworkSpec make_generator_spec(std::size_t latent_dim, std::size_t window_len,
                                std::size_t channels) {
  // Dense fan-out to a (channels x window_len+6) grid, then two
  // stride-1 convolutions narrowing by 3 each down to the window.
  const std::size_t hidden = std::max<std::size_t>(2 * latent_dim, 32);
  const std::size_t grid_len = window_len + 6;
  NetworkSpec spec;
  spec.layers.push_back(LayerSpec::dense(latent_dim, hidden));
  spec.layers.push_back(LayerSpec::batchnorm(hidden));
  spec.layers.push_back(LayerSpec::relu(hidden));
  spec.layers.push_back(LayerSpec::dense(hidden, channels * grid_len));
  spec.layers.push_back(LayerSpec::batchnorm(channels * grid_len));
  spec.layers.push_back(LayerSpec::relu(channels * grid_len));
  spec.layers.push_back(LayerSpec::conv1d(channels, grid_len, channels, 4, 1));
  spec.layers.push_back(LayerSpec::batchnorm(channels * (grid_len - 3)));
  spec.layers.push_back(LayerSpec::relu(channels * (grid_len - 3)));
  spec.layers.push_back(LayerSpec::conv1d(channels, grid_len - 3, 1, 4, 1));
  spec.validate();
  return spec;
}

NetworkSpec make_discriminator_spec(std::size_t window_len, std::size_t channels,
                                    std::size_t hidden, double leak) {
  if (window_len < 10) {
    throw ConfigError("make_discriminator_spec: window must be at least 10 steps");
  }
  NetworkSpec spec;
  LayerSpec c1 = LayerSpec::conv1d(1, window_len, channels, 4, 2);
  spec.layers.push_back(c1);
  spec.layers.push_back(LayerSpec::leakyrelu(c1.out_dim, leak));
  LayerSpec c2 = LayerSpec::conv1d(channels, c1.conv_out_length(), 2 * channels, 4, 2);
  spec.layers.push_back(c2);
  spec.layers.push_back(LayerSpec::batchnorm(c2.out_dim));
  spec.layers.push_back(LayerSpec::leakyrelu(c2.out_dim, leak));
  spec.layers.push_back(LayerSpec::dense(c2.out_dim, hidden));
  spec.layers.push_back(LayerSpec::batchnorm(hidden));
  spec.layers.push_back(LayerSpec::leakyrelu(hidden, leak));
  spec.layers.push_back(LayerSpec::dense(hidden, 1));
  spec.validate();
  return spec;
}

NetworkSpec make_dense_generator_spec(std::size_t latent_dim, std::size_t window_len,
                                      std::size_t hidden) {
  NetworkSpec spec;
  spec.layers.push_back(LayerSpec::dense(latent_dim, hidden));
  spec.layers.push_back(LayerSpec::relu(hidden));
  spec.layers.push_back(LayerSpec::dense(hidden, window_len));
  spec.validate();
  return spec;
}

NetworkSpec make_dense_discriminator_spec(std::size_t window_len, std::size_t hidden,
                                          double leak) {
  NetworkSpec spec;
  spec.layers.push_back(LayerSpec::dense(window_len, hidden));
  spec.layers.push_back(LayerSpec::leakyrelu(hidden, leak));
  spec.layers.push_back(LayerSpec::dense(hidden, 1));
  spec.validate();
  return spec;
}

GanModel make_model(std::size_t history_len, std::size_t horizon, std::uint64_t seed,
                    bool convolutional) {
  GanModel m;
  m.history_len = history_len;
  m.horizon = horizon;
  m.latent_dim = m.window_len();
  if (convolutional) {
    m.gen_spec = make_generator_spec(m.latent_dim, m.window_len());
    m.dis_spec = make_discriminator_spec(m.window_len());
  } else {
    m.gen_spec = make_dense_generator_spec(m.latent_dim, m.window_len());
    m.dis_spec = make_dense_discriminator_spec(m.window_len());
  }
  m.gen_params = nn::init_weights(m.gen_spec, Rng::stream(seed, 1).next_u64());
  m.dis_params = nn::init_weights(m.dis_spec, Rng::stream(seed, 2).next_u64());
  m.gen_bn = nn::init_batchnorm(m.gen_spec);
  m.dis_bn = nn::init_batchnorm(m.dis_spec);
  m.validate();
  return m;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
  if (!(clip > 0.0)) throw ConfigError("TrainConfig: clip must be > 0");
  if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be positive");
  if (n_discri == 0) throw ConfigError("TrainConfig: n_discri must be positive");
}

Tensor sample_noise(std::size_t m, std::size_t dim, Rng& rng) {
  if (m == 0 || dim == 0) throw ConfigError("sample_noise: m and dim must be positive");
  Tensor z = Tensor::zeros({m, dim});
  for (double& v : z.data) v = rng.uniform(-1.0, 1.0);
  return z;
}

namespace {

double mean_of(const Tensor& scores) {
  double s = 0.0;
  for (double v : scores.data) s += v;
  return s / static_cast<double>(scores.numel());
}

void check_batch(const GanModel& model, const Tensor& x_batch, const Tensor& z_batch) {
  if (x_batch.rank() != 2 || x_batch.dim(1) != model.window_len()) {
    throw ShapeError("x batch must be (m, h+k+1)");
  }
  if (z_batch.rank() != 2 || z_batch.dim(1) != model.latent_dim) {
    throw ShapeError("z batch must be (m, latent_dim)");
  }
}

}  // namespace

double discriminator_loss(const GanModel& model, const Tensor& x_batch,
                          const Tensor& z_batch) {
  check_batch(model, x_batch, z_batch);
  Tensor d_real = nn::forward_frozen(model.dis_spec, model.dis_params, model.dis_bn, x_batch);
  Tensor gz = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, z_batch);
  Tensor d_fake = nn::forward_frozen(model.dis_spec, model.dis_params, model.dis_bn, gz);
  return -mean_of(d_real) + mean_of(d_fake);
}

double generator_loss(const GanModel& model, const Tensor& z_batch) {
  if (z_batch.rank() != 2 || z_batch.dim(1) != model.latent_dim) {
    throw ShapeError("z batch must be (m, latent_dim)");
  }
  Tensor gz = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, z_batch);
  Tensor d_fake = nn::forward_frozen(model.dis_spec, model.dis_params, model.dis_bn, gz);
  return -mean_of(d_fake);
}

double game_value(const GanModel& model, const Tensor& x_batch, const Tensor& z_batch) {
  return -discriminator_loss(model, x_batch, z_batch);
}

void train(GanModel& model, const std::vector<std::vector<double>>& windows,
           const TrainConfig& config, TrainLog& log, const TrainHooks* hooks,
           TrainState* state) {
  model.validate();
  config.validate();
  if (windows.empty()) throw DataError("train: empty dataset");
  const std::size_t wlen = model.window_len();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].size() != wlen) {
      throw DataError("train: window " + std::to_string(i) + " has length " +
                      std::to_string(windows[i].size()) + ", expected " +
                      std::to_string(wlen));
    }
    for (double v : windows[i]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError("train: window " + std::to_string(i) +
                        " has a value outside [0,1]");
      }
    }
  }

  TrainState local;
  TrainState& st = state != nullptr ? *state : local;
  Rng rng(config.seed);
  if (!st.initialized) {
    st.dis_opt = nn::RmsPropState::for_network(model.dis_spec);
    st.gen_opt = nn::RmsPropState::for_network(model.gen_spec);
    st.rng_state = rng.save_state();
    st.next_iteration = 0;
    st.initialized = true;
  } else {
    rng.load_state(st.rng_state);
  }

  const std::size_t m = config.batch_size;
  const double inv_m = 1.0 / static_cast<double>(m);
  std::deque<double> gap_window;
  double gap_sum = 0.0;

  for (std::size_t iter = st.next_iteration; iter < config.iterations; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    double mean_real = 0.0, mean_fake = 0.0, loss_d = 0.0;

    for (std::size_t t = 0; t < config.n_discri; ++t) {
      Tensor x_batch = Tensor::zeros({m, wlen});
      for (std::size_t r = 0; r < m; ++r) {
        const std::vector<double>& w = windows[rng.index(windows.size())];
        std::copy(w.begin(), w.end(), x_batch.data.begin() + r * wlen);
      }
      Tensor z = sample_noise(m, model.latent_dim, rng);
      Tensor gz = nn::forward(model.gen_spec, model.gen_params, model.gen_bn, z,
                              Mode::training);

      nn::Tape tape_real, tape_fake;
      Tensor d_real = nn::forward(model.dis_spec, model.dis_params, model.dis_bn,
                                  x_batch, Mode::training, &tape_real);
      Tensor d_fake = nn::forward(model.dis_spec, model.dis_params, model.dis_bn, gz,
                                  Mode::training, &tape_fake);
      mean_real = mean_of(d_real);
      mean_fake = mean_of(d_fake);
      loss_d = -mean_real + mean_fake;
      if (!std::isfinite(loss_d)) {
        throw NumericError("train: non-finite discriminator loss at iteration " +
                           std::to_string(iter));
      }

      nn::BackwardResult back_real = nn::backward(
          model.dis_spec, model.dis_params, tape_real, Tensor::full({m, 1}, -inv_m));
      nn::BackwardResult back_fake = nn::backward(
          model.dis_spec, model.dis_params, tape_fake, Tensor::full({m, 1}, inv_m));
      for (std::size_t li = 0; li < back_real.param_grads.layers.size(); ++li) {
        auto& a = back_real.param_grads.layers[li];
        const auto& b = back_fake.param_grads.layers[li];
        for (std::size_t j = 0; j < a.weight.numel(); ++j) a.weight.data[j] += b.weight.data[j];
        for (std::size_t j = 0; j < a.bias.numel(); ++j) a.bias.data[j] += b.bias.data[j];
      }
      nn::rmsprop_step(model.dis_params, back_real.param_grads, st.dis_opt,
                       config.learning_rate);
      nn::clip_parameters(model.dis_params, config.clip);
      if (hooks != nullptr && hooks->after_discriminator_step) {
        hooks->after_discriminator_step(model, iter, t);
      }
    }

    // Generator update on a fresh noise batch.
    Tensor z = sample_noise(m, model.latent_dim, rng);
    nn::Tape tape_gen, tape_dis;
    Tensor gz = nn::forward(model.gen_spec, model.gen_params, model.gen_bn, z,
                            Mode::training, &tape_gen);
    Tensor d_fake = nn::forward(model.dis_spec, model.dis_params, model.dis_bn, gz,
                                Mode::training, &tape_dis);
    const double loss_g = -mean_of(d_fake);
    if (!std::isfinite(loss_g)) {
      throw NumericError("train: non-finite generator loss at iteration " +
                         std::to_string(iter));
    }
    nn::BackwardResult back_dis = nn::backward(model.dis_spec, model.dis_params, tape_dis,
                                               Tensor::full({m, 1}, -inv_m));
    nn::BackwardResult back_gen =
        nn::backward(model.gen_spec, model.gen_params, tape_gen, back_dis.input_grad);
    nn::rmsprop_step(model.gen_params, back_gen.param_grads, st.gen_opt,
                     config.learning_rate);

    auto t1 = std::chrono::steady_clock::now();
    TrainRecord rec;
    rec.iteration = iter;
    rec.mean_d_real = mean_real;
    rec.mean_d_fake = mean_fake;
    rec.loss_d = loss_d;
    rec.loss_g = loss_g;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    log.push_back(rec);

    st.next_iteration = iter + 1;
    st.rng_state = rng.save_state();
    if (hooks != nullptr && hooks->after_generator_step) {
      hooks->after_generator_step(model, iter, rec);
    }

    if (config.early_stop_window > 0) {
      const double gap = std::abs(mean_real - mean_fake);
      gap_window.push_back(gap);
      gap_sum += gap;
      if (gap_window.size() > config.early_stop_window) {
        gap_sum -= gap_window.front();
        gap_window.pop_front();
      }
      if (gap_window.size() == config.early_stop_window &&
          gap_sum / static_cast<double>(config.early_stop_window) <
              config.early_stop_threshold) {
        break;
      }
    }
  }
}

Tensor generate(const GanModel& model, std::size_t n, Rng& rng) {
  model.validate();
  if (n == 0) return Tensor{};
  Tensor z = sample_noise(n, model.latent_dim, rng);
  return nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, z);
}

}  // namespace scengen::gan

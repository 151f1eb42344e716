#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scengen/network.hpp"
#include "scengen/optim.hpp"
#include "test_util.hpp"

using namespace scengen;
using nn::LayerSpec;
using nn::Mode;
using nn::NetworkSpec;
using nn::Tensor;

namespace {

NetworkSpec single(LayerSpec l) {
  NetworkSpec s;
  s.layers.push_back(l);
  return s;
}

/// Random network containing the given hidden kind, depth <= 4.
NetworkSpec random_network(nn::LayerKind kind, Rng& rng) {
  const std::size_t in = 2 + rng.index(6);
  const std::size_t mid = 2 + rng.index(6);
  const std::size_t out = 1 + rng.index(4);
  NetworkSpec s;
  s.layers.push_back(LayerSpec::dense(in, mid));
  switch (kind) {
    case nn::LayerKind::dense:
      s.layers.push_back(LayerSpec::dense(mid, mid));
      break;
    case nn::LayerKind::conv1d: {
      const std::size_t ch = 1 + rng.index(3);
      const std::size_t len = 5 + rng.index(4);
      s.layers.back() = LayerSpec::dense(in, ch * len);
      s.layers.push_back(LayerSpec::conv1d(ch, len, 1 + rng.index(3), 2 + rng.index(3),
                                           1 + rng.index(2)));
      break;
    }
    case nn::LayerKind::batchnorm:
      s.layers.push_back(LayerSpec::batchnorm(mid));
      break;
    case nn::LayerKind::relu:
      s.layers.push_back(LayerSpec::relu(mid));
      break;
    case nn::LayerKind::leakyrelu:
      s.layers.push_back(LayerSpec::leakyrelu(mid, 0.1 + 0.5 * rng.uniform01()));
      break;
    case nn::LayerKind::identity:
      s.layers.push_back(LayerSpec::identity(mid));
      break;
  }
  s.layers.push_back(LayerSpec::dense(s.layers.back().out_dim, out));
  s.validate();
  return s;
}

Tensor random_input(const NetworkSpec& spec, std::size_t batch, Rng& rng) {
  Tensor x = Tensor::zeros({batch, spec.input_dim()});
  for (double& v : x.data) v = rng.uniform(-1.5, 1.5);
  return x;
}

}  // namespace

TEST_CASE("init_weights is deterministic in the seed") {
  NetworkSpec spec = single(LayerSpec::dense(8, 8));
  spec.layers.push_back(LayerSpec::batchnorm(8));
  auto a = nn::init_weights(spec, 7);
  auto b = nn::init_weights(spec, 7);
  REQUIRE(a.layers.size() == b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    CHECK(a.layers[i].weight.data == b.layers[i].weight.data);
    CHECK(a.layers[i].bias.data == b.layers[i].bias.data);
  }
  auto c = nn::init_weights(spec, 8);
  CHECK(a.layers[0].weight.data != c.layers[0].weight.data);
}

TEST_CASE("init_weights matches the target distribution") {
  // 10,000 dense weights in one layer.
  NetworkSpec spec = single(LayerSpec::dense(100, 100));
  auto params = nn::init_weights(spec, 123);
  const auto& w = params.layers[0].weight.data;
  REQUIRE(w.size() == 10000);
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w.size());
  CHECK(std::abs(mean) < 0.002);
  CHECK(std::abs(std::sqrt(var) - 0.02) < 0.002);
  for (double b : params.layers[0].bias.data) CHECK(b == 0.0);
}

TEST_CASE("forward identity network") {
  NetworkSpec spec = single(LayerSpec::identity(2));
  auto params = nn::init_weights(spec, 0);
  auto bn = nn::init_batchnorm(spec);
  Tensor out = nn::forward(spec, params, bn, Tensor({2}, {0.3, -0.1}), Mode::frozen);
  CHECK(out.data[0] == 0.3);
  CHECK(out.data[1] == -0.1);
}

TEST_CASE("forward dense + relu kills negative pre-activation") {
  NetworkSpec spec = single(LayerSpec::dense(1, 1));
  spec.layers.push_back(LayerSpec::relu(1));
  auto params = nn::zeros_like_params(spec);
  params.layers[0].weight.data[0] = 2.0;
  params.layers[0].bias.data[0] = 1.0;
  auto bn = nn::init_batchnorm(spec);
  Tensor out = nn::forward(spec, params, bn, Tensor({1}, {-3.0}), Mode::frozen);
  CHECK(out.data[0] == 0.0);
}

TEST_CASE("leakyrelu slope") {
  NetworkSpec spec = single(LayerSpec::leakyrelu(1, 0.2));
  auto params = nn::zeros_like_params(spec);
  auto bn = nn::init_batchnorm(spec);
  Tensor out = nn::forward(spec, params, bn, Tensor({1}, {-5.0}), Mode::frozen);
  CHECK(out.data[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("forward rejects shape mismatch and non-finite input") {
  NetworkSpec spec = single(LayerSpec::dense(3, 2));
  auto params = nn::init_weights(spec, 1);
  auto bn = nn::init_batchnorm(spec);
  CHECK_THROWS_AS(nn::forward(spec, params, bn, Tensor({2}, {1.0, 2.0}), Mode::frozen),
                  ShapeError);
  CHECK_THROWS_AS(nn::forward(spec, params, bn,
                              Tensor({3}, {1.0, std::nan(""), 0.0}), Mode::frozen),
                  NumericError);
}

TEST_CASE("backward: linear network input grad is W^T g") {
  NetworkSpec spec = single(LayerSpec::dense(3, 2));
  auto params = nn::init_weights(spec, 5);
  auto bn = nn::init_batchnorm(spec);
  Tensor x({3}, {0.5, -1.0, 2.0});
  nn::Tape tape;
  nn::forward(spec, params, bn, x, Mode::frozen, &tape);
  Tensor g({2}, {0.7, -0.3});
  auto back = nn::backward(spec, params, tape, g);
  const auto& w = params.layers[0].weight;
  for (std::size_t i = 0; i < 3; ++i) {
    double expect = w.at(0, i) * g.data[0] + w.at(1, i) * g.data[1];
    CHECK(back.input_grad.data[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("backward: relu subgradient at exactly zero is zero") {
  NetworkSpec spec = single(LayerSpec::relu(1));
  auto params = nn::zeros_like_params(spec);
  auto bn = nn::init_batchnorm(spec);
  nn::Tape tape;
  nn::forward(spec, params, bn, Tensor({1}, {0.0}), Mode::frozen, &tape);
  auto back = nn::backward(spec, params, tape, Tensor({1}, {1.0}));
  CHECK(back.input_grad.data[0] == 0.0);
}

TEST_CASE("backward matches central finite differences for every layer kind") {
  // 100 random trials per layer kind, parameter and input gradients.
  for (nn::LayerKind kind :
       {nn::LayerKind::dense, nn::LayerKind::conv1d, nn::LayerKind::batchnorm,
        nn::LayerKind::relu, nn::LayerKind::leakyrelu, nn::LayerKind::identity}) {
    Rng rng(0x5eed0 + static_cast<std::uint64_t>(kind));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      NetworkSpec spec = random_network(kind, rng);
      auto params = nn::init_weights(spec, rng.next_u64());
      // Larger weights make gradients well-scaled for the check.
      for (auto& lp : params.layers) {
        for (double& v : lp.weight.data) v *= 20.0;
      }
      auto bn = nn::init_batchnorm(spec);
      const std::size_t batch = 2 + rng.index(3);
      const Mode mode = kind == nn::LayerKind::batchnorm && trial % 2 == 0
                            ? Mode::training
                            : (trial % 2 == 0 ? Mode::frozen : Mode::training);
      auto check = testutil::finite_diff_check(spec, params, bn,
                                               random_input(spec, batch, rng), mode, rng);
      worst = std::max({worst, check.max_param_err, check.max_input_err});
    }
    INFO("layer kind ", nn::to_string(kind));
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("frozen forward is pure: bit-identical outputs") {
  Rng rng(42);
  NetworkSpec spec = random_network(nn::LayerKind::batchnorm, rng);
  auto params = nn::init_weights(spec, 9);
  auto bn = nn::init_batchnorm(spec);
  // Populate running stats, then freeze.
  nn::forward(spec, params, bn, random_input(spec, 8, rng), Mode::training);
  Tensor x = random_input(spec, 4, rng);
  Tensor a = nn::forward_frozen(spec, params, bn, x);
  Tensor b = nn::forward_frozen(spec, params, bn, x);
  CHECK(a.data == b.data);
}

TEST_CASE("batchnorm training output is normalized before the affine map") {
  const std::size_t d = 6, m = 32;
  NetworkSpec spec = single(LayerSpec::identity(d));
  spec.layers.push_back(LayerSpec::batchnorm(d));
  auto params = nn::zeros_like_params(spec);
  // Affine transform set to identity.
  for (double& v : params.layers[1].weight.data) v = 1.0;
  auto bn = nn::init_batchnorm(spec);
  Rng rng(3);
  Tensor x = Tensor::zeros({m, d});
  for (double& v : x.data) v = rng.uniform(-2.0, 2.0);
  Tensor y = nn::forward(spec, params, bn, x, Mode::training);
  for (std::size_t f = 0; f < d; ++f) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m; ++r) mean += y.at(r, f);
    mean /= m;
    double var = 0.0;
    for (std::size_t r = 0; r < m; ++r) var += (y.at(r, f) - mean) * (y.at(r, f) - mean);
    var /= m;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-8);
  }
}

TEST_CASE("rmsprop hand-computed update") {
  std::vector<double> x{1.0};
  nn::RmsPropVecState st;
  st.rho = 0.9;
  st.epsilon = 0.0;
  nn::rmsprop_step(x, {1.0}, st, 0.01);
  CHECK(st.acc[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(x[0] == doctest::Approx(1.0 - 0.01 / std::sqrt(0.1)).epsilon(1e-12));
}

TEST_CASE("rmsprop zero gradient leaves parameters unchanged") {
  NetworkSpec spec = single(LayerSpec::dense(4, 3));
  auto params = nn::init_weights(spec, 11);
  auto before = params;
  auto grads = nn::zeros_like_params(spec);
  auto st = nn::RmsPropState::for_network(spec);
  nn::rmsprop_step(params, grads, st, 0.05);
  CHECK(params.layers[0].weight.data == before.layers[0].weight.data);
  CHECK(params.layers[0].bias.data == before.layers[0].bias.data);
}

TEST_CASE("rmsprop trajectories are deterministic") {
  auto run = [] {
    std::vector<double> x{0.5, -0.25};
    nn::RmsPropVecState st;
    for (int i = 0; i < 10; ++i) nn::rmsprop_step(x, {0.3, -0.1}, st, 0.01);
    return x;
  };
  CHECK(run() == run());
}

TEST_CASE("momentum reduces to gradient descent at mu=0") {
  std::vector<double> x{2.0};
  nn::MomentumState st;
  nn::momentum_step(x, {0.5}, st, 0.1, 0.0);
  CHECK(x[0] == doctest::Approx(2.0 - 0.1 * 0.5).epsilon(1e-15));
}

TEST_CASE("momentum accumulates velocity over steps") {
  std::vector<double> x{1.0};
  nn::MomentumState st;
  nn::momentum_step(x, {1.0}, st, 0.1, 0.5);
  CHECK(x[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-15));
  nn::momentum_step(x, {1.0}, st, 0.1, 0.5);
  CHECK(x[0] == doctest::Approx(1.0 - 0.1 - 0.15).epsilon(1e-15));
}

TEST_CASE("momentum with zero gradient and zero velocity is a no-op") {
  std::vector<double> x{0.7};
  nn::MomentumState st;
  nn::momentum_step(x, {0.0}, st, 0.1, 0.9);
  CHECK(x[0] == 0.7);
}

TEST_CASE("clip_values") {
  Tensor t({2}, {0.3, -0.2});
  Tensor c = nn::clip_values(t, -0.1, 0.1);
  CHECK(c.data[0] == 0.1);
  CHECK(c.data[1] == -0.1);

  Tensor inside({3}, {0.05, -0.03, 0.0});
  CHECK(nn::clip_values(inside, -0.1, 0.1).data == inside.data);

  Tensor wide({2}, {-1.5, 2.0});
  Tensor cw = nn::clip_values(wide, -1.0, 1.0);
  CHECK(cw.data[0] == -1.0);
  CHECK(cw.data[1] == 1.0);

  CHECK_THROWS_AS(nn::clip_values(t, 0.5, -0.5), ConfigError);

  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor r = Tensor::zeros({1 + rng.index(20)});
    for (double& v : r.data) v = rng.uniform(-5.0, 5.0);
    double lo = rng.uniform(-2.0, 0.0), hi = rng.uniform(0.0, 2.0);
    Tensor cl = nn::clip_values(r, lo, hi);
    for (double v : cl.data) {
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

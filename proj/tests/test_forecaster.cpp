#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "scengen/forecaster.hpp"
#include "test_util.hpp"

using namespace scengen;
using forecast::ForecastProblem;
using gan::GanModel;

namespace {

/// Dense model whose generator output sits near `center`, so small
/// problems are comfortably inside typical prediction intervals.
GanModel centered_model(std::size_t h, std::size_t k, double center,
                        std::uint64_t seed) {
  GanModel m = gan::make_model(h, k, seed, /*convolutional=*/false);
  auto& out_layer = m.gen_params.layers.back();
  for (double& b : out_layer.bias.data) b = center;
  return m;
}

/// Generator emitting a constant window regardless of z.
GanModel constant_model(std::size_t h, std::size_t k, double value) {
  GanModel m = gan::make_model(h, k, 0, /*convolutional=*/false);
  m.gen_params = nn::zeros_like_params(m.gen_spec);
  m.gen_params.layers.back().bias = nn::Tensor::full({m.window_len()}, value);
  return m;
}

ForecastProblem small_problem(const GanModel& m, double forecast_level, double alpha) {
  ForecastProblem p;
  p.hist.assign(m.history_len + 1, 0.5);
  p.point_forecast.assign(m.horizon, forecast_level);
  p.alpha = alpha;
  p.num_scenarios = 4;
  p.init_iters = 20;
  p.scen_iters = 30;
  p.step_size = 0.05;
  p.seed = 11;
  return p;
}

}  // namespace

TEST_CASE("projection operators") {
  std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(forecast::project_hist(v, 1, 3) == std::vector<double>{1, 2});
  CHECK(forecast::project_pred(v, 1, 3) == std::vector<double>{3, 4, 5});
  CHECK(forecast::project_pred(std::vector<double>{7, 8, 9}, 0, 2) ==
        std::vector<double>{8, 9});
  CHECK_THROWS_AS(forecast::project_hist(v, 4, 0), ConfigError);
  CHECK_THROWS_AS(forecast::project_hist(v, 2, 3), ShapeError);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = rng.index(5);
    const std::size_t k = 1 + rng.index(5);
    std::vector<double> w(h + k + 1);
    for (double& x : w) x = rng.uniform(-1.0, 1.0);
    auto hist = forecast::project_hist(w, h, k);
    auto pred = forecast::project_pred(w, h, k);
    hist.insert(hist.end(), pred.begin(), pred.end());
    CHECK(hist == w);  // partition identity
  }
}

TEST_CASE("interval bounds") {
  auto b = forecast::interval_bounds({0.5, 0.8}, 2.0);
  CHECK(b.lower == std::vector<double>{0.25, 0.4});
  CHECK(b.upper == std::vector<double>{1.0, 1.6});

  // alpha -> 1+ collapses to the point forecast.
  auto tight = forecast::interval_bounds({0.5}, 1.0 + 1e-9);
  CHECK(tight.lower[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(tight.upper[0] == doctest::Approx(0.5).epsilon(1e-8));

  CHECK_THROWS_AS(forecast::interval_bounds({0.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(forecast::interval_bounds({0.0}, 2.0), DataError);

  auto capped = forecast::interval_bounds({0.8}, 2.0, 1.0);
  CHECK(capped.upper[0] == 1.0);

  // Monotone nesting over random positive forecasts.
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(1 + rng.index(6));
    for (double& x : p) x = rng.uniform(0.01, 1.0);
    const double a1 = 1.0 + rng.uniform(0.01, 1.0);
    const double a2 = a1 + rng.uniform(0.01, 1.0);
    auto inner = forecast::interval_bounds(p, a1);
    auto outer = forecast::interval_bounds(p, a2);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(outer.lower[i] <= inner.lower[i]);
      CHECK(inner.upper[i] <= outer.upper[i]);
    }
  }
}

TEST_CASE("main objective: boundary hits give an infinite sentinel") {
  GanModel m = constant_model(1, 2, 0.25);
  ForecastProblem p = small_problem(m, 0.5, 2.0);  // L = 0.25 exactly on G output
  std::vector<double> z(m.latent_dim, 0.1);
  auto obj = forecast::main_objective(z, p, m);
  CHECK(std::isinf(obj.value));
  for (double g : obj.grad) CHECK(g == 0.0);
}

TEST_CASE("main objective: exact history match with barriers disabled is zero") {
  GanModel m = constant_model(1, 2, 0.5);
  ForecastProblem p = small_problem(m, 0.5, 2.0);
  p.beta = 0.0;
  p.gamma = 0.0;
  std::vector<double> z(m.latent_dim, -0.3);
  auto obj = forecast::main_objective(z, p, m);
  CHECK(obj.value == 0.0);
}

TEST_CASE("main objective gradient matches finite differences") {
  GanModel m = centered_model(2, 3, 0.5, 17);
  ForecastProblem p = small_problem(m, 0.5, 3.0);
  p.beta = 0.01;
  p.gamma = 0.1;
  Rng rng(23);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(m.latent_dim);
    for (double& v : z) v = rng.uniform(-0.9, 0.9);
    auto obj = forecast::main_objective(z, p, m);
    if (!std::isfinite(obj.value)) continue;
    const double err = testutil::finite_diff_vector_check(
        z, obj.grad,
        [&](const std::vector<double>& probe) {
          return forecast::main_objective(probe, p, m).value;
        });
    worst = std::max(worst, err);
    ++checked;
  }
  REQUIRE(checked >= 40);
  CHECK(worst < 1e-5);
}

TEST_CASE("init objective: zero at an exact match and nonnegative") {
  GanModel m = constant_model(1, 3, 0.4);
  ForecastProblem p = small_problem(m, 0.4, 2.0);
  std::vector<double> z(m.latent_dim, 0.2);
  std::vector<double> target(m.horizon, 0.4);
  auto obj = forecast::init_objective(z, target, p, m);
  CHECK(obj.value == 0.0);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> t2(m.horizon);
    for (double& v : t2) v = rng.uniform(0.2, 0.8);
    CHECK(forecast::init_objective(z, t2, p, m).value >= 0.0);
  }
}

TEST_CASE("init objective gradient matches finite differences") {
  GanModel m = centered_model(2, 3, 0.5, 29);
  ForecastProblem p = small_problem(m, 0.5, 2.0);
  Rng rng(37);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(m.latent_dim);
    for (double& v : z) v = rng.uniform(-0.9, 0.9);
    std::vector<double> target(m.horizon);
    for (double& v : target) v = rng.uniform(0.3, 0.7);
    auto obj = forecast::init_objective(z, target, p, m);
    const double err = testutil::finite_diff_vector_check(
        z, obj.grad,
        [&](const std::vector<double>& probe) {
          return forecast::init_objective(probe, target, p, m).value;
        });
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("find_initial_z: zero iterations returns the raw draw") {
  GanModel m = centered_model(1, 2, 0.5, 41);
  ForecastProblem p = small_problem(m, 0.5, 2.0);
  p.init_iters = 0;

  Rng rng(55);
  std::vector<double> z = forecast::find_initial_z(p, m, rng);

  // Replay the documented draw order: p_initial first, then z.
  Rng replay(55);
  auto sub = forecast::interval_bounds(p.point_forecast, p.effective_alpha_sub());
  for (std::size_t i = 0; i < sub.lower.size(); ++i) {
    replay.uniform(sub.lower[i], sub.upper[i]);
  }
  std::vector<double> expect(m.latent_dim);
  for (double& v : expect) v = replay.uniform(-1.0, 1.0);
  CHECK(z == expect);
}

TEST_CASE("find_initial_z stays inside the hypercube and descends") {
  GanModel m = centered_model(2, 3, 0.5, 43);
  ForecastProblem p = small_problem(m, 0.5, 2.0);
  p.init_iters = 40;

  std::size_t improved = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng_full(trial);
    std::vector<double> p_initial;
    std::vector<double> zf =
        forecast::find_initial_z(p, m, rng_full, nullptr, 0, &p_initial);
    for (double v : zf) CHECK(std::abs(v) <= 1.0);

    ForecastProblem p0 = p;
    p0.init_iters = 0;
    Rng rng_zero(trial);
    std::vector<double> z0 = forecast::find_initial_z(p0, m, rng_zero);

    const double before = forecast::init_objective(z0, p_initial, p, m).value;
    const double after = forecast::init_objective(zf, p_initial, p, m).value;
    if (after <= before) ++improved;
  }
  CHECK(improved >= 90);
}

TEST_CASE("forecast_scenarios: empty request, feasibility, determinism") {
  GanModel m = centered_model(2, 3, 0.5, 47);
  ForecastProblem p = small_problem(m, 0.5, 3.0);

  ForecastProblem none = p;
  none.num_scenarios = 0;
  CHECK(forecast::forecast_scenarios(none, m).scenarios.empty());

  forecast::ScenarioSet a = forecast::forecast_scenarios(p, m);
  forecast::ScenarioSet b = forecast::forecast_scenarios(p, m);
  REQUIRE(a.scenarios.size() == p.num_scenarios);
  auto bounds = forecast::interval_bounds(p.point_forecast, p.alpha);
  for (std::size_t i = 0; i < a.scenarios.size(); ++i) {
    CHECK(a.scenarios[i].values == b.scenarios[i].values);
    CHECK(a.scenarios[i].latent == b.scenarios[i].latent);
    CHECK(a.scenarios[i].feasible == b.scenarios[i].feasible);
    if (a.scenarios[i].feasible) {
      for (std::size_t j = 0; j < a.scenarios[i].values.size(); ++j) {
        CHECK(a.scenarios[i].values[j] > bounds.lower[j]);
        CHECK(a.scenarios[i].values[j] < bounds.upper[j]);
      }
    }
  }

  // Parallel execution returns the same set.
  forecast::ScenarioSet c = forecast::forecast_scenarios(p, m, /*threads=*/3);
  for (std::size_t i = 0; i < a.scenarios.size(); ++i) {
    CHECK(a.scenarios[i].values == c.scenarios[i].values);
  }
}

TEST_CASE("latent iterates stay clipped during the full search") {
  GanModel m = centered_model(1, 3, 0.5, 53);
  ForecastProblem p = small_problem(m, 0.5, 2.0);
  p.num_scenarios = 2;
  forecast::ForecastHooks hooks;
  std::size_t steps = 0;
  hooks.after_latent_step = [&](forecast::ForecastHooks::Phase, std::size_t, std::size_t,
                                const std::vector<double>& z) {
    for (double v : z) CHECK(std::abs(v) <= 1.0);
    ++steps;
  };
  forecast::forecast_scenarios(p, m, 1, &hooks);
  CHECK(steps >= p.num_scenarios * p.init_iters);
}

TEST_CASE("infeasible problems are flagged, not dropped") {
  // Constant generator far outside the requested interval.
  GanModel m = constant_model(1, 2, 0.9);
  ForecastProblem p = small_problem(m, 0.1, 1.5);  // U = 0.15 << 0.9
  p.num_scenarios = 3;
  forecast::ScenarioSet set = forecast::forecast_scenarios(p, m);
  REQUIRE(set.scenarios.size() == 3);
  for (const auto& sc : set.scenarios) {
    CHECK_FALSE(sc.feasible);
    CHECK(sc.restarts == p.max_restarts);
    CHECK(std::isinf(sc.objective));
  }
}

TEST_CASE("feasibility report aggregates and is recomputable") {
  GanModel m = centered_model(2, 3, 0.5, 59);
  ForecastProblem p = small_problem(m, 0.5, 3.0);
  forecast::ScenarioSet set = forecast::forecast_scenarios(p, m);
  forecast::FeasibilityReport rep = forecast::feasibility_report(set, m);
  REQUIRE(rep.total == set.scenarios.size());

  auto bounds = forecast::interval_bounds(p.point_forecast, p.alpha);
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
    const auto& sc = set.scenarios[i];
    double lo = std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sc.values.size(); ++j) {
      lo = std::min(lo, sc.values[j] - bounds.lower[j]);
      hi = std::min(hi, bounds.upper[j] - sc.values[j]);
    }
    CHECK(std::abs(rep.lower_margin[i] - lo) < 1e-12);
    CHECK(std::abs(rep.upper_margin[i] - hi) < 1e-12);
    if (sc.feasible) {
      ++feasible;
      CHECK(rep.lower_margin[i] >= 0.0);
      CHECK(rep.upper_margin[i] >= 0.0);
    }
  }
  CHECK(rep.feasible_count == feasible);
  if (feasible == rep.total) CHECK(rep.feasible_fraction == 1.0);
}

#include "scengen/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scengen/model_io.hpp"

namespace scengen::forecast {

using nn::Tensor;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> floored_forecast(const ForecastProblem& p) {
  std::vector<double> f = p.point_forecast;
  for (double& v : f) {
    if (v < p.forecast_floor) v = p.forecast_floor;
  }
  return f;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double ForecastProblem::effective_alpha_sub() const {
  if (alpha_sub > 0.0) return alpha_sub;
  return 1.0 + 0.8 * (alpha - 1.0);
}

void ForecastProblem::validate(const gan::GanModel& model) const {
  if (hist.size() != model.history_len + 1) {
    throw ShapeError("ForecastProblem: hist must have length h+1 = " +
                     std::to_string(model.history_len + 1));
  }
  if (point_forecast.empty() || point_forecast.size() > model.horizon) {
    throw ShapeError("ForecastProblem: point forecast length must lie in [1, k]");
  }
  for (double v : hist) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("ForecastProblem: history values must lie in [0,1]");
    }
  }
  for (double v : point_forecast) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DataError("ForecastProblem: point forecasts must be finite and nonnegative");
    }
  }
  if (!(alpha > 1.0)) throw ConfigError("ForecastProblem: alpha must be > 1");
  const double sub = effective_alpha_sub();
  if (!(sub > 1.0 && sub < alpha)) {
    throw ConfigError("ForecastProblem: alpha_sub must satisfy 1 < alpha_sub < alpha");
  }
  if (!(beta >= 0.0) || !(gamma >= 0.0)) {
    throw ConfigError("ForecastProblem: beta and gamma must be nonnegative");
  }
  if (!(step_size > 0.0)) throw ConfigError("ForecastProblem: step_size must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("ForecastProblem: momentum must lie in [0,1)");
  }
  if (!(forecast_floor > 0.0)) {
    throw ConfigError("ForecastProblem: forecast_floor must be > 0");
  }
}

std::vector<double> project_hist(const std::vector<double>& v, std::size_t h,
                                 std::size_t k) {
  if (k == 0) throw ConfigError("project_hist: forecast horizon must be >= 1");
  if (v.size() != h + k + 1) {
    throw ShapeError("project_hist: vector length " + std::to_string(v.size()) +
                     " != h+k+1 = " + std::to_string(h + k + 1));
  }
  return std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h + 1));
}

std::vector<double> project_pred(const std::vector<double>& v, std::size_t h,
                                 std::size_t k) {
  if (k == 0) throw ConfigError("project_pred: forecast horizon must be >= 1");
  if (v.size() != h + k + 1) {
    throw ShapeError("project_pred: vector length " + std::to_string(v.size()) +
                     " != h+k+1 = " + std::to_string(h + k + 1));
  }
  return std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(k), v.end());
}

IntervalBounds interval_bounds(const std::vector<double>& point_forecast, double alpha,
                               std::optional<double> upper_cap) {
  if (!(alpha > 1.0)) throw ConfigError("interval_bounds: alpha must be > 1");
  IntervalBounds b;
  b.lower.reserve(point_forecast.size());
  b.upper.reserve(point_forecast.size());
  for (std::size_t i = 0; i < point_forecast.size(); ++i) {
    const double p = point_forecast[i];
    if (!(p > 0.0)) {
      throw DataError("interval_bounds: point forecast at lead " + std::to_string(i) +
                      " is not positive; apply the forecast floor first");
    }
    double lo = p / alpha;
    double hi = alpha * p;
    if (upper_cap.has_value() && hi > *upper_cap) hi = *upper_cap;
    b.lower.push_back(lo);
    b.upper.push_back(hi);
  }
  return b;
}

namespace {

struct GeneratorEval {
  Tensor output;  // window, length h+k+1
  nn::Tape tape;
};

GeneratorEval eval_generator(const std::vector<double>& z, const gan::GanModel& model) {
  if (z.size() != model.latent_dim) {
    throw ShapeError("latent vector length does not match model latent_dim");
  }
  GeneratorEval ev;
  Tensor zt({z.size()}, z);
  ev.output = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, zt,
                                 &ev.tape);
  return ev;
}

/// Forecast leads of the generated window (first `k_eff` of the pred part).
std::size_t pred_offset(const gan::GanModel& model) { return model.history_len + 1; }

bool window_feasible(const Tensor& window, const gan::GanModel& model,
                     const IntervalBounds& bounds) {
  const std::size_t off = pred_offset(model);
  for (std::size_t i = 0; i < bounds.lower.size(); ++i) {
    const double v = window.data[off + i];
    if (!(v > bounds.lower[i] && v < bounds.upper[i])) return false;
  }
  return true;
}

/// Cheap feasibility probe: generator forward only, no tape.
bool z_feasible(const std::vector<double>& z, const gan::GanModel& model,
                const IntervalBounds& bounds) {
  Tensor zt({z.size()}, z);
  Tensor out = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, zt);
  return window_feasible(out, model, bounds);
}

}  // namespace

ObjectiveValue main_objective(const std::vector<double>& z, const ForecastProblem& problem,
                              const gan::GanModel& model) {
  problem.validate(model);
  GeneratorEval ev = eval_generator(z, model);
  const std::size_t wlen = model.window_len();
  const std::size_t hlen = model.history_len + 1;
  const std::size_t k_eff = problem.point_forecast.size();
  const std::size_t off = pred_offset(model);

  ObjectiveValue res;
  res.grad.assign(z.size(), 0.0);
  std::vector<double> upstream(wlen, 0.0);
  double value = 0.0;

  // History fit term |P_hist(G(z)) - hist|_2.
  std::vector<double> resid(hlen);
  for (std::size_t i = 0; i < hlen; ++i) resid[i] = ev.output.data[i] - problem.hist[i];
  const double hist_norm = norm2(resid);
  value += hist_norm;
  if (hist_norm > 0.0) {
    for (std::size_t i = 0; i < hlen; ++i) upstream[i] += resid[i] / hist_norm;
  }

  // Log barriers on the forecast leads.
  if (problem.beta > 0.0) {
    const IntervalBounds bounds =
        interval_bounds(floored_forecast(problem), problem.alpha, problem.upper_cap);
    for (std::size_t i = 0; i < k_eff; ++i) {
      const double p = ev.output.data[off + i];
      const double slack_lo = p - bounds.lower[i];
      const double slack_hi = bounds.upper[i] - p;
      if (!(slack_lo > 0.0) || !(slack_hi > 0.0)) {
        res.value = kInf;
        std::fill(res.grad.begin(), res.grad.end(), 0.0);
        return res;
      }
      value += -problem.beta * (std::log(slack_lo) + std::log(slack_hi));
      upstream[off + i] += -problem.beta / slack_lo + problem.beta / slack_hi;
    }
  }

  // Realism term -gamma * D(G(z)).
  if (problem.gamma > 0.0) {
    nn::Tape dis_tape;
    Tensor score = nn::forward_frozen(model.dis_spec, model.dis_params, model.dis_bn,
                                      ev.output, &dis_tape);
    value += -problem.gamma * score.data[0];
    nn::BackwardResult dback = nn::backward(model.dis_spec, model.dis_params, dis_tape,
                                            Tensor({std::size_t{1}}, {1.0}));
    for (std::size_t i = 0; i < wlen; ++i) {
      upstream[i] -= problem.gamma * dback.input_grad.data[i];
    }
  }

  nn::BackwardResult gback = nn::backward(model.gen_spec, model.gen_params, ev.tape,
                                          Tensor({wlen}, upstream));
  res.value = value;
  res.grad = gback.input_grad.data;
  return res;
}

ObjectiveValue init_objective(const std::vector<double>& z,
                              const std::vector<double>& p_initial,
                              const ForecastProblem& problem, const gan::GanModel& model) {
  problem.validate(model);
  if (p_initial.size() != problem.point_forecast.size()) {
    throw ShapeError("init_objective: p_initial length does not match forecast length");
  }
  GeneratorEval ev = eval_generator(z, model);
  const std::size_t wlen = model.window_len();
  const std::size_t off = pred_offset(model);
  const std::size_t k_eff = p_initial.size();

  std::vector<double> resid(k_eff);
  for (std::size_t i = 0; i < k_eff; ++i) resid[i] = ev.output.data[off + i] - p_initial[i];
  const double n = norm2(resid);

  std::vector<double> upstream(wlen, 0.0);
  if (n > 0.0) {
    for (std::size_t i = 0; i < k_eff; ++i) upstream[off + i] = resid[i] / n;
  }
  nn::BackwardResult gback = nn::backward(model.gen_spec, model.gen_params, ev.tape,
                                          Tensor({wlen}, upstream));
  ObjectiveValue res;
  res.value = n;
  res.grad = gback.input_grad.data;
  return res;
}

std::vector<double> find_initial_z(const ForecastProblem& problem,
                                   const gan::GanModel& model, Rng& rng,
                                   const ForecastHooks* hooks,
                                   std::size_t scenario_index,
                                   std::vector<double>* p_initial_out) {
  problem.validate(model);
  const IntervalBounds sub_bounds = interval_bounds(
      floored_forecast(problem), problem.effective_alpha_sub(), problem.upper_cap);

  std::vector<double> p_initial(sub_bounds.lower.size());
  for (std::size_t i = 0; i < p_initial.size(); ++i) {
    p_initial[i] = rng.uniform(sub_bounds.lower[i], sub_bounds.upper[i]);
  }
  if (p_initial_out != nullptr) *p_initial_out = p_initial;
  std::vector<double> z(model.latent_dim);
  for (double& v : z) v = rng.uniform(-1.0, 1.0);

  nn::MomentumState vel;
  for (std::size_t it = 0; it < problem.init_iters; ++it) {
    ObjectiveValue obj = init_objective(z, p_initial, problem, model);
    nn::momentum_step(z, obj.grad, vel, problem.step_size, problem.momentum);
    for (double& v : z) v = std::clamp(v, -1.0, 1.0);
    if (hooks != nullptr && hooks->after_latent_step) {
      hooks->after_latent_step(ForecastHooks::Phase::init, scenario_index, it, z);
    }
  }
  return z;
}

ScenarioSet forecast_scenarios(const ForecastProblem& problem, const gan::GanModel& model,
                               std::size_t threads, const ForecastHooks* hooks) {
  problem.validate(model);
  model.validate();
  if (hooks != nullptr) threads = 1;  // hooks observe a serial order

  ScenarioSet set;
  set.problem = problem;
  set.seed = problem.seed;
  set.model_id = io::model_id(model);
  for (double v : problem.point_forecast) {
    if (v < problem.forecast_floor) {
      set.floor_applied = true;
      break;
    }
  }
  set.scenarios.resize(problem.num_scenarios);
  if (problem.num_scenarios == 0) return set;

  const IntervalBounds bounds =
      interval_bounds(floored_forecast(problem), problem.alpha, problem.upper_cap);
  const std::size_t off = pred_offset(model);
  const std::size_t k_eff = problem.point_forecast.size();

  parallel_for(problem.num_scenarios, threads, [&](std::size_t idx) {
    Rng rng = Rng::stream(problem.seed, idx);
    std::vector<double> z;
    std::size_t restarts = 0;
    bool started_feasible = false;
    while (true) {
      z = find_initial_z(problem, model, rng, hooks, idx);
      started_feasible = problem.beta == 0.0 || z_feasible(z, model, bounds);
      if (started_feasible || restarts >= problem.max_restarts) break;
      ++restarts;
    }

    nn::MomentumState vel;
    vel.velocity.assign(z.size(), 0.0);
    if (started_feasible) {
      for (std::size_t it = 0; it < problem.scen_iters; ++it) {
        ObjectiveValue obj = main_objective(z, problem, model);
        if (!std::isfinite(obj.value)) break;
        for (std::size_t i = 0; i < z.size(); ++i) {
          vel.velocity[i] = problem.momentum * vel.velocity[i] + obj.grad[i];
        }
        double step = problem.step_size;
        for (std::size_t bt = 0; bt <= problem.max_backtracks; ++bt) {
          std::vector<double> trial(z.size());
          for (std::size_t i = 0; i < z.size(); ++i) {
            trial[i] = std::clamp(z[i] - step * vel.velocity[i], -1.0, 1.0);
          }
          if (problem.beta == 0.0 || z_feasible(trial, model, bounds)) {
            z = std::move(trial);
            break;
          }
          step *= 0.5;
        }
        if (hooks != nullptr && hooks->after_latent_step) {
          hooks->after_latent_step(ForecastHooks::Phase::scenario, idx, it, z);
        }
      }
    }

    Tensor zt({z.size()}, z);
    Tensor window = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, zt);
    Scenario& sc = set.scenarios[idx];
    sc.values.assign(window.data.begin() + static_cast<std::ptrdiff_t>(off),
                     window.data.begin() + static_cast<std::ptrdiff_t>(off + k_eff));
    sc.latent = z;
    sc.feasible = window_feasible(window, model, bounds);
    sc.objective = main_objective(z, problem, model).value;
    sc.restarts = restarts;
  });
  return set;
}

FeasibilityReport feasibility_report(const ScenarioSet& set, const gan::GanModel& model) {
  FeasibilityReport rep;
  rep.total = set.scenarios.size();
  if (rep.total == 0) return rep;
  const ForecastProblem& p = set.problem;
  const IntervalBounds bounds =
      interval_bounds(floored_forecast(p), p.alpha, p.upper_cap);
  const std::size_t hlen = model.history_len + 1;

  for (const Scenario& sc : set.scenarios) {
    double lo_margin = kInf, hi_margin = kInf;
    for (std::size_t i = 0; i < sc.values.size(); ++i) {
      lo_margin = std::min(lo_margin, sc.values[i] - bounds.lower[i]);
      hi_margin = std::min(hi_margin, bounds.upper[i] - sc.values[i]);
    }
    rep.lower_margin.push_back(lo_margin);
    rep.upper_margin.push_back(hi_margin);

    Tensor zt({sc.latent.size()}, sc.latent);
    Tensor window = nn::forward_frozen(model.gen_spec, model.gen_params, model.gen_bn, zt);
    std::vector<double> resid(hlen);
    for (std::size_t i = 0; i < hlen; ++i) resid[i] = window.data[i] - p.hist[i];
    rep.hist_mismatch.push_back(norm2(resid));
    if (sc.feasible) ++rep.feasible_count;
  }
  rep.feasible_fraction =
      static_cast<double>(rep.feasible_count) / static_cast<double>(rep.total);
  return rep;
}

}  // namespace scengen::forecast

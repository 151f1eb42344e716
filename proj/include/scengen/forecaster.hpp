#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scengen/gan.hpp"

namespace scengen::forecast {

/// One conditional scenario-forecast instance. `point_forecast` may be
/// shorter than the model horizon; barriers then constrain only the
/// leading leads and scenarios are reported at that length.
struct ForecastProblem {
  std::vector<double> hist;            // recent window, chronological, length h+1
  std::vector<double> point_forecast;  // central forecast, length 1..k
  double alpha = 2.0;       // prediction-interval level, > 1
  double alpha_sub = 0.0;   // initialization level; 0 = auto 1 + 0.8*(alpha-1)
  double beta = 0.01;       // barrier weight
  double gamma = 0.1;       // discriminator realism weight
  std::size_t num_scenarios = 20;
  std::size_t init_iters = 200;
  std::size_t scen_iters = 500;
  double step_size = 0.05;
  double momentum = 0.9;
  double forecast_floor = 1e-3;          // applied before Eq.-style bounds
  std::optional<double> upper_cap;       // optional clamp on the upper bound
  std::size_t max_restarts = 5;
  std::size_t max_backtracks = 20;
  std::uint64_t seed = 0;

  double effective_alpha_sub() const;
  void validate(const gan::GanModel& model) const;
};

struct IntervalBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct Scenario {
  std::vector<double> values;  // forecast part of G(z*), problem horizon length
  std::vector<double> latent;  // z*
  double objective = 0.0;
  bool feasible = false;
  std::size_t restarts = 0;
};

struct ScenarioSet {
  std::vector<Scenario> scenarios;
  ForecastProblem problem;
  std::string model_id;
  std::uint64_t seed = 0;
  bool floor_applied = false;
};

/// First h+1 components of a full window vector.
std::vector<double> project_hist(const std::vector<double>& v, std::size_t h,
                                 std::size_t k);

/// Last k components of a full window vector.
std::vector<double> project_pred(const std::vector<double>& v, std::size_t h,
                                 std::size_t k);

/// L = p/alpha, U = alpha*p (optionally capped). Requires alpha > 1
/// and strictly positive forecasts.
IntervalBounds interval_bounds(const std::vector<double>& point_forecast, double alpha,
                               std::optional<double> upper_cap = std::nullopt);

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> grad;  // d/dz, latent_dim
};

/// Barrier objective over the latent vector:
///   |P_hist(G(z)) - hist|_2
///   - beta * sum_i log(P_pred(G(z))_i - L_i)
///   - beta * sum_i log(U_i - P_pred(G(z))_i)
///   - gamma * D(G(z)).
/// Returns +infinity (zero gradient) when any barrier argument is
/// nonpositive. Networks run frozen.
ObjectiveValue main_objective(const std::vector<double>& z, const ForecastProblem& problem,
                              const gan::GanModel& model);

/// Initialization objective |P_pred(G(z)) - p_initial|_2 of the
/// subsidiary problem.
ObjectiveValue init_objective(const std::vector<double>& z,
                              const std::vector<double>& p_initial,
                              const ForecastProblem& problem, const gan::GanModel& model);

/// Per-step observation hooks for the latent loops.
struct ForecastHooks {
  enum class Phase { init, scenario };
  std::function<void(Phase, std::size_t scenario_index, std::size_t iteration,
                     const std::vector<double>& z)>
      after_latent_step;
};

/// Samples p_initial within the alpha_sub interval, draws z uniform in
/// the hypercube, then runs init_iters momentum steps on the
/// initialization objective with per-step clipping to [-1,1].
/// `p_initial_out`, when given, receives the sampled target.
std::vector<double> find_initial_z(const ForecastProblem& problem,
                                   const gan::GanModel& model, Rng& rng,
                                   const ForecastHooks* hooks = nullptr,
                                   std::size_t scenario_index = 0,
                                   std::vector<double>* p_initial_out = nullptr);

/// Full scenario search: per scenario, initialization then scen_iters
/// momentum steps on the barrier objective with clipping and
/// backtracking on barrier violations. Infeasible starts are retried
/// up to max_restarts times and flagged if still infeasible.
/// Scenarios use independent rng streams derived from problem.seed and
/// may be computed in parallel (`threads`).
ScenarioSet forecast_scenarios(const ForecastProblem& problem, const gan::GanModel& model,
                               std::size_t threads = 1,
                               const ForecastHooks* hooks = nullptr);

struct FeasibilityReport {
  double feasible_fraction = 0.0;
  std::size_t feasible_count = 0;
  std::size_t total = 0;
  // Per scenario, in set order:
  std::vector<double> lower_margin;   // min_i (value_i - L_i)
  std::vector<double> upper_margin;   // min_i (U_i - value_i)
  std::vector<double> hist_mismatch;  // |P_hist(G(z*)) - hist|_2
};

FeasibilityReport feasibility_report(const ScenarioSet& set, const gan::GanModel& model);

}  // namespace scengen::forecast

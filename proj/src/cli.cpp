#include "scengen/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scengen/copula.hpp"
#include "scengen/data.hpp"
#include "scengen/forecaster.hpp"
#include "scengen/gan.hpp"
#include "scengen/metrics.hpp"
#include "scengen/model_io.hpp"

namespace scengen::cli {

using nlohmann::json;

namespace {

void write_manifest(const std::string& primary_output, const std::string& subcommand,
                    json options) {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
  json manifest{{"subcommand", subcommand},
                {"options", std::move(options)},
                {"generated_at", data::format_timestamp(secs.count())}};
  io::write_text_file(primary_output + ".manifest.json", manifest.dump(2) + "\n");
}

data::PowerSeries load_normalized(const std::string& path, double capacity) {
  data::PowerSeries series = data::load_csv(path);
  series.capacity = capacity;
  return data::normalize(series);
}

/// Windows for a run; day-aligned mode trims to the first midnight and
/// strides by one day.
std::vector<data::Window> build_windows(const data::PowerSeries& series, std::size_t h,
                                        std::size_t k, std::size_t stride,
                                        bool day_aligned) {
  if (!day_aligned) return data::make_windows(series, h, k, stride);
  const std::int64_t step = series.step_seconds();
  if (step <= 0 || 86400 % step != 0) {
    throw DataError("day-aligned windows need a spacing dividing 24h");
  }
  std::size_t first = series.size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::int64_t ts = series.timestamps[i];
    if (((ts % 86400) + 86400) % 86400 == 0) {
      first = i;
      break;
    }
  }
  if (first == series.size()) {
    throw DataError("day-aligned windows: no midnight sample found");
  }
  data::PowerSeries trimmed;
  trimmed.capacity = series.capacity;
  trimmed.timestamps.assign(series.timestamps.begin() + static_cast<std::ptrdiff_t>(first),
                            series.timestamps.end());
  trimmed.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(first),
                        series.values.end());
  if (series.has_forecasts()) {
    trimmed.forecasts.assign(series.forecasts.begin() + static_cast<std::ptrdiff_t>(first),
                             series.forecasts.end());
  }
  return data::make_windows(trimmed, h, k,
                            static_cast<std::size_t>(86400 / step));
}

struct SplitOptions {
  double ratio = 0.9;
  std::uint64_t seed = 0;
};

/// ratio >= 1 disables the split: everything lands on both sides.
data::SplitResult apply_split(const std::vector<data::Window>& windows,
                              const SplitOptions& split) {
  if (split.ratio >= 1.0) {
    data::SplitResult res;
    res.train = windows;
    res.test = windows;
    return res;
  }
  return data::split_by_day(windows, split.ratio, split.seed);
}

std::vector<std::size_t> pick_instances(std::size_t pool, std::size_t count) {
  if (pool == 0) throw DataError("no usable forecast instances in the test split");
  count = std::min(count, pool);
  std::vector<std::size_t> idx;
  idx.reserve(count);
  if (count == 1) {
    idx.push_back(0);
    return idx;
  }
  for (std::size_t i = 0; i < count; ++i) {
    idx.push_back(i * (pool - 1) / (count - 1));
  }
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::string alpha_tag(double alpha) {
  std::string s = format_double(alpha);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

// ---------------------------------------------------------------- synth

void add_synth(CLI::App& app, int& rc) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic power series CSV");
  cmd->set_config("--config");
  auto opt = std::make_shared<data::SyntheticConfig>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--out", *out, "Output CSV path")->required();
  cmd->add_option("--length", opt->length, "Number of samples")->required();
  cmd->add_option("--seed", opt->seed, "Random seed");
  cmd->add_option("--ar", opt->ar_coeff, "AR(1) coefficient");
  cmd->add_option("--diurnal", opt->diurnal_amplitude, "Diurnal amplitude");
  cmd->add_option("--noise", opt->noise_std, "Innovation std");
  cmd->add_option("--base", opt->base_level, "Base level");
  cmd->add_option("--step-seconds", opt->step_seconds, "Sample spacing in seconds");
  auto no_clip = std::make_shared<bool>(false);
  cmd->add_flag("--no-clip", *no_clip, "Do not clip values to [0,1]");

  cmd->callback([cmd, opt, out, no_clip, &rc]() {
    opt->clip_to_unit = !*no_clip;
    data::PowerSeries series = data::synth_generate(*opt);
    data::save_csv(series, *out);
    write_manifest(*out, "synth",
                   json{{"out", *out},
                        {"length", opt->length},
                        {"seed", opt->seed},
                        {"ar", opt->ar_coeff},
                        {"diurnal", opt->diurnal_amplitude},
                        {"noise", opt->noise_std},
                        {"base", opt->base_level},
                        {"step_seconds", opt->step_seconds},
                        {"clip", opt->clip_to_unit}});
    std::cout << "wrote " << series.size() << " samples to " << *out << "\n";
    rc = 0;
  });
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data_path;
  std::string model_out;
  std::string trainlog_out;
  double capacity = 1.0;
  std::size_t h = 15;
  std::size_t k = 16;
  std::size_t stride = 1;
  bool day_aligned = false;
  SplitOptions split;
  gan::TrainConfig config;
  std::uint64_t model_seed = 0;
  bool dense = false;
  std::size_t checkpoint_every = 0;
  std::string checkpoint_prefix;
  std::string resume_path;
};

void add_train(CLI::App& app, int& rc) {
  auto* cmd = app.add_subcommand("train", "Train a WGAN on windowed series data");
  cmd->set_config("--config");
  auto o = std::make_shared<TrainOptions>();
  cmd->add_option("--data", o->data_path, "Training series CSV")->required();
  cmd->add_option("--out", o->model_out, "Model output path")->required();
  cmd->add_option("--trainlog", o->trainlog_out, "Training log CSV path");
  cmd->add_option("--capacity", o->capacity, "Nominal capacity for normalization");
  cmd->add_option("--history", o->h, "History length h (window is h+k+1)");
  cmd->add_option("--horizon", o->k, "Forecast horizon k");
  cmd->add_option("--stride", o->stride, "Window stride");
  cmd->add_flag("--day-aligned", o->day_aligned, "Day-aligned windows (stride one day)");
  cmd->add_option("--split-ratio", o->split.ratio, "Train fraction of days (1 = no split)");
  cmd->add_option("--split-seed", o->split.seed, "Split shuffle seed");
  cmd->add_option("--iters", o->config.iterations, "Generator iterations")->required();
  cmd->add_option("--lr", o->config.learning_rate, "RMSProp learning rate");
  cmd->add_option("--clip", o->config.clip, "Weight clip c");
  cmd->add_option("--batch", o->config.batch_size, "Batch size m");
  cmd->add_option("--n-discri", o->config.n_discri, "Discriminator steps per iteration");
  cmd->add_option("--seed", o->config.seed, "Training seed");
  cmd->add_option("--model-seed", o->model_seed, "Weight init seed");
  cmd->add_flag("--dense", o->dense, "Dense-only networks (small fixtures)");
  cmd->add_option("--checkpoint-every", o->checkpoint_every,
                  "Checkpoint interval in iterations (0 = off)");
  cmd->add_option("--checkpoint-prefix", o->checkpoint_prefix, "Checkpoint path prefix");
  cmd->add_option("--resume", o->resume_path, "Resume from checkpoint");

  cmd->callback([o, &rc]() {
    data::PowerSeries series = load_normalized(o->data_path, o->capacity);
    std::vector<data::Window> windows =
        build_windows(series, o->h, o->k, o->stride, o->day_aligned);
    data::SplitResult split = apply_split(windows, o->split);
    if (split.train.empty()) throw DataError("train: no training windows after split");

    std::vector<std::vector<double>> train_windows;
    train_windows.reserve(split.train.size());
    for (const auto& w : split.train) train_windows.push_back(w.full());

    gan::GanModel model;
    gan::TrainState state;
    if (!o->resume_path.empty()) {
      io::load_checkpoint(o->resume_path, model, state);
      if (model.history_len != o->h || model.horizon != o->k) {
        throw ConfigError("train: checkpoint geometry does not match --history/--horizon");
      }
    } else {
      model = gan::make_model(o->h, o->k, o->model_seed, !o->dense);
    }

    gan::TrainLog log;
    gan::TrainHooks hooks;
    if (o->checkpoint_every > 0) {
      const std::string prefix =
          o->checkpoint_prefix.empty() ? o->model_out : o->checkpoint_prefix;
      hooks.after_generator_step = [&state, o, prefix](const gan::GanModel& m,
                                                       std::size_t iter,
                                                       const gan::TrainRecord&) {
        if ((iter + 1) % o->checkpoint_every == 0) {
          io::save_checkpoint(m, state, prefix + ".ckpt-" + std::to_string(iter + 1) +
                                            ".json");
        }
      };
    }
    gan::train(model, train_windows, o->config, log,
               o->checkpoint_every > 0 ? &hooks : nullptr, &state);

    io::save_model(model, o->model_out);
    if (!o->trainlog_out.empty()) io::save_trainlog_csv(log, o->trainlog_out);
    write_manifest(o->model_out, "train",
                   json{{"data", o->data_path},
                        {"out", o->model_out},
                        {"trainlog", o->trainlog_out},
                        {"capacity", o->capacity},
                        {"history", o->h},
                        {"horizon", o->k},
                        {"stride", o->stride},
                        {"day_aligned", o->day_aligned},
                        {"split_ratio", o->split.ratio},
                        {"split_seed", o->split.seed},
                        {"iters", o->config.iterations},
                        {"lr", o->config.learning_rate},
                        {"clip", o->config.clip},
                        {"batch", o->config.batch_size},
                        {"n_discri", o->config.n_discri},
                        {"seed", o->config.seed},
                        {"model_seed", o->model_seed},
                        {"dense", o->dense},
                        {"resume", o->resume_path},
                        {"train_windows", split.train.size()},
                        {"model_id", io::model_id(model)}});
    std::cout << "trained " << log.size() << " iterations on " << split.train.size()
              << " windows; model " << io::model_id(model) << " -> " << o->model_out
              << "\n";
    rc = 0;
  });
}

// ------------------------------------------------------------- forecast

struct ForecastOptions {
  std::string model_path;
  std::string data_path;
  std::string out_prefix;
  double capacity = 1.0;
  std::size_t stride = 1;
  bool day_aligned = false;
  SplitOptions split;
  std::vector<double> alphas{2.0};
  std::vector<std::size_t> horizons;  // empty = model horizon
  forecast::ForecastProblem base;     // shared solver settings
  std::size_t instances = 1;
  bool cap_to_unit = false;
};

void add_forecast(CLI::App& app, int& rc) {
  auto* cmd = app.add_subcommand("forecast",
                                 "Conditional scenario forecasts from a trained model");
  cmd->set_config("--config");
  auto o = std::make_shared<ForecastOptions>();
  cmd->add_option("--model", o->model_path, "Trained model JSON")->required();
  cmd->add_option("--data", o->data_path, "Series CSV providing forecast instances")
      ->required();
  cmd->add_option("--out", o->out_prefix, "Output path prefix")->required();
  cmd->add_option("--capacity", o->capacity, "Nominal capacity for normalization");
  cmd->add_option("--stride", o->stride, "Window stride");
  cmd->add_flag("--day-aligned", o->day_aligned, "Day-aligned windows");
  cmd->add_option("--split-ratio", o->split.ratio, "Train fraction of days (1 = no split)");
  cmd->add_option("--split-seed", o->split.seed, "Split shuffle seed");
  cmd->add_option("--alpha", o->alphas, "Prediction-interval level(s)")
      ->expected(-1);
  cmd->add_option("--horizon", o->horizons,
                  "Forecast horizon(s) <= model k (default: model k)")
      ->expected(-1);
  cmd->add_option("--instances", o->instances, "Forecast origins from the test split");
  cmd->add_option("--n", o->base.num_scenarios, "Scenarios per instance");
  cmd->add_option("--beta", o->base.beta, "Barrier weight");
  cmd->add_option("--gamma", o->base.gamma, "Realism weight");
  cmd->add_option("--eta", o->base.step_size, "Latent step size");
  cmd->add_option("--mu", o->base.momentum, "Momentum coefficient");
  cmd->add_option("--n-init", o->base.init_iters, "Initialization iterations");
  cmd->add_option("--n-scen", o->base.scen_iters, "Scenario iterations");
  cmd->add_option("--alpha-sub", o->base.alpha_sub,
                  "Initialization PI level (0 = auto)");
  cmd->add_option("--floor", o->base.forecast_floor, "Point-forecast floor");
  cmd->add_option("--seed", o->base.seed, "Forecast seed");
  cmd->add_flag("--cap", o->cap_to_unit, "Cap upper bounds at 1.0");

  cmd->callback([o, &rc]() {
    gan::GanModel model = io::load_model(o->model_path);
    data::PowerSeries series = load_normalized(o->data_path, o->capacity);
    std::vector<data::Window> windows = build_windows(
        series, model.history_len, model.horizon, o->stride, o->day_aligned);
    data::SplitResult split = apply_split(windows, o->split);
    const std::vector<std::size_t> picks =
        pick_instances(split.test.size(), o->instances);
    const bool explicit_horizons = !o->horizons.empty();
    std::vector<std::size_t> horizons =
        explicit_horizons ? o->horizons : std::vector<std::size_t>{model.horizon};
    for (std::size_t k_eff : horizons) {
      if (k_eff == 0 || k_eff > model.horizon) {
        throw ConfigError("forecast: --horizon must lie in [1, model k]");
      }
    }
    if (o->alphas.empty()) throw ConfigError("forecast: need at least one --alpha");
    const std::size_t threads = env_thread_count();

    std::size_t feasible_total = 0, scenario_total = 0;
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      const std::size_t k_eff = horizons[hi];
      const std::string horizon_tag =
          explicit_horizons ? "_h" + std::to_string(k_eff) : "";
      for (std::size_t ai = 0; ai < o->alphas.size(); ++ai) {
        const double alpha = o->alphas[ai];
        std::vector<io::ScenarioDocument> docs;
        std::ostringstream feas;
        feas << "instance,origin_ts,feasible,total,min_lower_margin,min_upper_margin,"
                "mean_hist_mismatch\n";
        for (std::size_t ii = 0; ii < picks.size(); ++ii) {
          const data::Window& w = split.test[picks[ii]];
          forecast::ForecastProblem prob = o->base;
          prob.alpha = alpha;
          prob.hist = w.history;
          prob.point_forecast.assign(
              w.forecast.begin(), w.forecast.begin() + static_cast<std::ptrdiff_t>(k_eff));
          if (o->cap_to_unit) prob.upper_cap = 1.0;
          prob.seed =
              Rng::stream(o->base.seed, (hi * 1000003ull + ai) * 1000003ull + ii).next_u64();

          forecast::ScenarioSet set = forecast::forecast_scenarios(prob, model, threads);
          forecast::FeasibilityReport rep = forecast::feasibility_report(set, model);
          feasible_total += rep.feasible_count;
          scenario_total += rep.total;

          double min_lo = std::numeric_limits<double>::infinity();
          double min_hi = std::numeric_limits<double>::infinity();
          double mean_mismatch = 0.0;
          for (std::size_t s = 0; s < rep.total; ++s) {
            min_lo = std::min(min_lo, rep.lower_margin[s]);
            min_hi = std::min(min_hi, rep.upper_margin[s]);
            mean_mismatch += rep.hist_mismatch[s];
          }
          if (rep.total > 0) mean_mismatch /= static_cast<double>(rep.total);
          feas << ii << ',' << w.origin_ts << ',' << rep.feasible_count << ','
               << rep.total << ',' << format_double(min_lo) << ','
               << format_double(min_hi) << ',' << format_double(mean_mismatch) << '\n';

          io::ScenarioDocument doc;
          doc.method = "gan";
          doc.set = std::move(set);
          doc.origin_ts = w.origin_ts;
          doc.realization.assign(w.horizon.begin(),
                                 w.horizon.begin() + static_cast<std::ptrdiff_t>(k_eff));
          docs.push_back(std::move(doc));

          io::save_scenario_csv(docs.back().set, o->out_prefix + horizon_tag + "_alpha" +
                                                     alpha_tag(alpha) + "_inst" +
                                                     std::to_string(ii) + ".csv");
        }
        const std::string base = o->out_prefix + horizon_tag + "_alpha" + alpha_tag(alpha);
        io::save_scenario_json(docs, base + ".json");
        io::write_text_file(base + "_feasibility.csv", feas.str());
      }
    }

    write_manifest(o->out_prefix, "forecast",
                   json{{"model", o->model_path},
                        {"data", o->data_path},
                        {"out", o->out_prefix},
                        {"capacity", o->capacity},
                        {"stride", o->stride},
                        {"day_aligned", o->day_aligned},
                        {"split_ratio", o->split.ratio},
                        {"split_seed", o->split.seed},
                        {"alphas", o->alphas},
                        {"horizons", horizons},
                        {"instances", picks.size()},
                        {"n", o->base.num_scenarios},
                        {"beta", o->base.beta},
                        {"gamma", o->base.gamma},
                        {"eta", o->base.step_size},
                        {"mu", o->base.momentum},
                        {"n_init", o->base.init_iters},
                        {"n_scen", o->base.scen_iters},
                        {"alpha_sub", o->base.alpha_sub},
                        {"floor", o->base.forecast_floor},
                        {"seed", o->base.seed},
                        {"cap", o->cap_to_unit},
                        {"model_id", io::model_id(model)}});
    std::cout << "feasible " << feasible_total << "/" << scenario_total
              << " scenarios across " << picks.size() << " instance(s)\n";
    rc = (scenario_total > 0 && feasible_total == 0) ? 3 : 0;
  });
}

// --------------------------------------------------------------- copula

struct CopulaOptions {
  std::string data_path;
  std::string out_prefix;
  double capacity = 1.0;
  std::size_t h = 15;
  std::size_t k = 16;
  std::size_t stride = 1;
  bool day_aligned = false;
  SplitOptions split;
  std::size_t instances = 1;
  std::size_t n = 20;
  double alpha = 2.0;
  std::uint64_t seed = 0;
};

void add_copula(CLI::App& app, int& rc) {
  auto* cmd = app.add_subcommand("copula", "Gaussian-copula baseline scenarios");
  cmd->set_config("--config");
  auto o = std::make_shared<CopulaOptions>();
  cmd->add_option("--data", o->data_path, "Series CSV")->required();
  cmd->add_option("--out", o->out_prefix, "Output path prefix")->required();
  cmd->add_option("--capacity", o->capacity, "Nominal capacity for normalization");
  cmd->add_option("--history", o->h, "History length h");
  cmd->add_option("--horizon", o->k, "Forecast horizon k");
  cmd->add_option("--stride", o->stride, "Window stride");
  cmd->add_flag("--day-aligned", o->day_aligned, "Day-aligned windows");
  cmd->add_option("--split-ratio", o->split.ratio, "Train fraction of days (1 = no split)");
  cmd->add_option("--split-seed", o->split.seed, "Split shuffle seed");
  cmd->add_option("--instances", o->instances, "Instances from the test split");
  cmd->add_option("--n", o->n, "Scenarios per instance");
  cmd->add_option("--alpha", o->alpha, "PI level recorded for feasibility flags");
  cmd->add_option("--seed", o->seed, "Sampling seed");

  cmd->callback([o, &rc]() {
    data::PowerSeries series = load_normalized(o->data_path, o->capacity);
    std::vector<data::Window> windows =
        build_windows(series, o->h, o->k, o->stride, o->day_aligned);
    data::SplitResult split = apply_split(windows, o->split);
    if (split.train.empty()) throw DataError("copula: no training windows after split");

    std::vector<std::vector<double>> horizons;
    horizons.reserve(split.train.size());
    for (const auto& w : split.train) horizons.push_back(w.horizon);
    copula::CopulaModel fitted = copula::fit_copula(horizons, o->k);

    const std::vector<std::size_t> picks =
        pick_instances(split.test.size(), o->instances);
    std::vector<io::ScenarioDocument> docs;
    for (std::size_t ii = 0; ii < picks.size(); ++ii) {
      const data::Window& w = split.test[picks[ii]];
      Rng rng = Rng::stream(o->seed, ii);
      std::vector<std::vector<double>> samples = copula::sample_copula(fitted, o->n, rng);

      forecast::ForecastProblem prob;
      prob.hist = w.history;
      prob.point_forecast = w.forecast;
      prob.alpha = o->alpha;
      prob.num_scenarios = o->n;
      prob.seed = o->seed;
      const forecast::IntervalBounds bounds = forecast::interval_bounds(
          [&] {
            std::vector<double> f = w.forecast;
            for (double& v : f) v = std::max(v, prob.forecast_floor);
            return f;
          }(),
          o->alpha);

      forecast::ScenarioSet set;
      set.problem = prob;
      set.seed = prob.seed;
      set.model_id = "copula";
      for (const auto& s : samples) {
        forecast::Scenario sc;
        sc.values = s;
        sc.objective = 0.0;
        sc.feasible = true;
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (!(s[i] > bounds.lower[i] && s[i] < bounds.upper[i])) {
            sc.feasible = false;
            break;
          }
        }
        set.scenarios.push_back(std::move(sc));
      }

      io::ScenarioDocument doc;
      doc.method = "copula";
      doc.set = std::move(set);
      doc.origin_ts = w.origin_ts;
      doc.realization = w.horizon;
      docs.push_back(std::move(doc));
      io::save_scenario_csv(docs.back().set,
                            o->out_prefix + "_inst" + std::to_string(ii) + ".csv");
    }
    io::save_scenario_json(docs, o->out_prefix + ".json");

    write_manifest(o->out_prefix, "copula",
                   json{{"data", o->data_path},
                        {"out", o->out_prefix},
                        {"capacity", o->capacity},
                        {"history", o->h},
                        {"horizon", o->k},
                        {"stride", o->stride},
                        {"day_aligned", o->day_aligned},
                        {"split_ratio", o->split.ratio},
                        {"split_seed", o->split.seed},
                        {"instances", picks.size()},
                        {"n", o->n},
                        {"alpha", o->alpha},
                        {"seed", o->seed},
                        {"train_windows", split.train.size()},
                        {"jitter", fitted.jitter}});
    std::cout << "sampled " << o->n << " copula scenarios for " << picks.size()
              << " instance(s)\n";
    rc = 0;
  });
}

// ----------------------------------------------------------------- eval

struct EvalOptions {
  std::vector<std::string> scenario_files;
  std::string out_dir;
  std::size_t k_max = 0;  // 0 = horizon - 1
};

void add_eval(CLI::App& app, int& rc) {
  auto* cmd = app.add_subcommand("eval", "Evaluate scenario files against realizations");
  cmd->set_config("--config");
  auto o = std::make_shared<EvalOptions>();
  cmd->add_option("--scenarios", o->scenario_files, "Scenario JSON file(s)")
      ->required()
      ->expected(-1);
  cmd->add_option("--out", o->out_dir, "Output directory/prefix")->required();
  cmd->add_option("--k-max", o->k_max, "Autocorrelation max lag (0 = horizon-1)");

  cmd->callback([o, &rc]() {
    std::map<std::string, std::vector<io::ScenarioDocument>> by_method;
    for (const std::string& path : o->scenario_files) {
      for (io::ScenarioDocument& doc : io::load_scenario_json(path)) {
        by_method[doc.method].push_back(std::move(doc));
      }
    }
    if (by_method.empty()) throw DataError("eval: no scenario instances found");

    json summary;
    std::size_t shared_k = 0;
    std::map<std::string, double> mean_crps;

    for (auto& [method, docs] : by_method) {
      std::vector<std::vector<std::vector<double>>> instance_values;
      std::vector<std::vector<double>> realizations;
      std::vector<std::vector<double>> pooled;
      std::size_t clamped = 0, feasible = 0, total = 0;

      for (const auto& doc : docs) {
        if (doc.realization.empty()) {
          throw DataError("eval: instance without realization for method " + method);
        }
        std::vector<std::vector<double>> values;
        for (const auto& sc : doc.set.scenarios) {
          if (sc.values.size() != doc.realization.size()) {
            throw DataError("eval: scenario/realization horizon mismatch");
          }
          std::vector<double> v = sc.values;
          for (double& x : v) {
            if (x < 0.0 || x > 1.0) {
              x = std::clamp(x, 0.0, 1.0);
              ++clamped;
            }
          }
          values.push_back(v);
          pooled.push_back(v);
          if (sc.feasible) ++feasible;
          ++total;
        }
        if (values.empty()) throw DataError("eval: instance with no scenarios");
        instance_values.push_back(std::move(values));
        realizations.push_back(doc.realization);
      }

      const std::size_t k = realizations.front().size();
      if (shared_k == 0) shared_k = k;
      if (k != shared_k) {
        throw DataError("eval: methods disagree on the lead-time axis");
      }

      std::vector<double> crps = metrics::crps_curve(instance_values, realizations);
      io::save_crps_csv(crps, o->out_dir + "/crps_" + method + ".csv");

      double mean = 0.0;
      for (double v : crps) mean += v;
      mean /= static_cast<double>(crps.size());
      mean_crps[method] = mean;

      json method_summary{{"instances", instance_values.size()},
                          {"scenarios", total},
                          {"feasible", feasible},
                          {"mean_crps", mean},
                          {"clamped_values", clamped},
                          {"crps", crps}};

      // Degenerate statistics (constant leads, e.g. sharply clamped
      // scenarios) skip the file rather than fail the whole report.
      const std::size_t k_max = o->k_max == 0 ? k - 1 : std::min(o->k_max, k - 1);
      if (k_max >= 1) {
        try {
          metrics::AutocorrCurve ac = metrics::mean_autocorrelation(pooled, k_max);
          io::save_autocorr_csv(ac, o->out_dir + "/autocorr_" + method + ".csv");
          method_summary["autocorrelation"] = ac.values;
        } catch (const DataError& e) {
          method_summary["autocorr_skipped"] = e.what();
        }
      }
      if (pooled.size() >= 2) {
        try {
          metrics::CorrelationMatrix pm = metrics::pearson_matrix(pooled);
          io::save_pearson_csv(pm, o->out_dir + "/pearson_" + method + ".csv");
          json rows = json::array();
          for (std::size_t i = 0; i < pm.dim; ++i) {
            rows.push_back(std::vector<double>(pm.rho.begin() + i * pm.dim,
                                               pm.rho.begin() + (i + 1) * pm.dim));
          }
          method_summary["pearson"] = std::move(rows);
        } catch (const DataError& e) {
          method_summary["pearson_skipped"] = e.what();
        }
      }
      summary[method] = std::move(method_summary);
    }

    // Realization-side statistics (shared across methods).
    {
      std::vector<std::vector<double>> realizations;
      std::set<std::int64_t> seen;
      for (const auto& [method, docs] : by_method) {
        for (const auto& doc : docs) {
          if (doc.realization.size() == shared_k && seen.insert(doc.origin_ts).second) {
            realizations.push_back(doc.realization);
          }
        }
      }
      const std::size_t k_max =
          o->k_max == 0 ? shared_k - 1 : std::min(o->k_max, shared_k - 1);
      try {
        if (!realizations.empty() && k_max >= 1) {
          metrics::AutocorrCurve ac = metrics::mean_autocorrelation(realizations, k_max);
          io::save_autocorr_csv(ac, o->out_dir + "/autocorr_realizations.csv");
        }
        if (realizations.size() >= 2) {
          metrics::CorrelationMatrix pm = metrics::pearson_matrix(realizations);
          io::save_pearson_csv(pm, o->out_dir + "/pearson_realizations.csv");
        }
      } catch (const DataError& e) {
        summary["realizations_stats_skipped"] = e.what();
      }
    }

    if (mean_crps.count("gan") != 0 && mean_crps.count("copula") != 0) {
      summary["gan_below_copula"] = mean_crps["gan"] < mean_crps["copula"];
    }
    io::write_text_file(o->out_dir + "/metrics.json", summary.dump(2) + "\n");
    write_manifest(o->out_dir + "/metrics.json", "eval",
                   json{{"scenarios", o->scenario_files},
                        {"out", o->out_dir},
                        {"k_max", o->k_max}});
    std::cout << "evaluated " << by_method.size() << " method(s); metrics in "
              << o->out_dir << "/metrics.json\n";
    rc = 0;
  });
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Scenario forecasting toolkit: WGAN training, latent-space "
               "conditional forecasts, Gaussian-copula baseline, evaluation"};
  app.require_subcommand(1);
  int rc = 0;
  add_synth(app, rc);
  add_train(app, rc);
  add_forecast(app, rc);
  add_copula(app, rc);
  add_eval(app, rc);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}

}  // namespace scengen::cli

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scengen/forecaster.hpp"
#include "scengen/gan.hpp"
#include "scengen/metrics.hpp"

namespace scengen::io {

inline constexpr const char* kModelFormat = "scengen-model";
inline constexpr const char* kCheckpointFormat = "scengen-checkpoint";
inline constexpr const char* kScenarioFormat = "scengen-scenarios";
inline constexpr int kFormatVersion = 1;

/// Self-describing JSON document with the network specs, parameters,
/// batchnorm statistics, and window geometry. Values round-trip
/// bit-exactly.
void save_model(const gan::GanModel& model, const std::string& path);
gan::GanModel load_model(const std::string& path);

std::string model_to_json_string(const gan::GanModel& model);
gan::GanModel model_from_json_string(const std::string& text);

/// Stable hex id derived from the serialized model bytes.
std::string model_id(const gan::GanModel& model);

/// Model plus optimizer/rng state, enough to resume training
/// bit-exactly.
void save_checkpoint(const gan::GanModel& model, const gan::TrainState& state,
                     const std::string& path);
void load_checkpoint(const std::string& path, gan::GanModel& model,
                     gan::TrainState& state);

/// iteration, E[D(x)], E[D(G(z))], L_D, L_G.
void save_trainlog_csv(const gan::TrainLog& log, const std::string& path);

/// One forecast instance with its provenance and (optionally) the
/// realized outcome, as produced by the forecast/copula commands and
/// consumed by eval.
struct ScenarioDocument {
  std::string method;  // "gan" or "copula"
  forecast::ScenarioSet set;
  std::int64_t origin_ts = 0;
  std::vector<double> realization;  // empty when unknown
};

/// scenario_id, lead_index, value, feasible
void save_scenario_csv(const forecast::ScenarioSet& set, const std::string& path);

/// Combined JSON document over a list of instances (one method).
void save_scenario_json(const std::vector<ScenarioDocument>& docs,
                        const std::string& path);
std::vector<ScenarioDocument> load_scenario_json(const std::string& path);

void save_autocorr_csv(const metrics::AutocorrCurve& curve, const std::string& path);

/// Flat (i, j, rho) table.
void save_pearson_csv(const metrics::CorrelationMatrix& matrix, const std::string& path);

/// lead,value rows, leads numbered from 1.
void save_crps_csv(const std::vector<double>& curve, const std::string& path);

/// Whole-file helpers.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace scengen::io

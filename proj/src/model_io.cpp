#include "scengen/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace scengen::io {

using nlohmann::json;
using nn::LayerKind;
using nn::LayerSpec;
using nn::NetworkSpec;
using nn::Tensor;

namespace {

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                j.at("data").get<std::vector<double>>());
}

json layer_to_json(const LayerSpec& l) {
  json j{{"kind", nn::to_string(l.kind)}, {"in_dim", l.in_dim}, {"out_dim", l.out_dim}};
  if (l.kind == LayerKind::conv1d) {
    j["in_channels"] = l.in_channels;
    j["in_length"] = l.in_length;
    j["out_channels"] = l.out_channels;
    j["kernel_width"] = l.kernel_width;
    j["stride"] = l.stride;
  }
  if (l.kind == LayerKind::leakyrelu) j["leak"] = l.leak;
  return j;
}

LayerSpec layer_from_json(const json& j) {
  const LayerKind kind = nn::layer_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case LayerKind::dense:
      return LayerSpec::dense(j.at("in_dim"), j.at("out_dim"));
    case LayerKind::conv1d:
      return LayerSpec::conv1d(j.at("in_channels"), j.at("in_length"),
                               j.at("out_channels"), j.at("kernel_width"), j.at("stride"));
    case LayerKind::batchnorm:
      return LayerSpec::batchnorm(j.at("in_dim"));
    case LayerKind::relu:
      return LayerSpec::relu(j.at("in_dim"));
    case LayerKind::leakyrelu:
      return LayerSpec::leakyrelu(j.at("in_dim"), j.value("leak", 0.2));
    case LayerKind::identity:
      return LayerSpec::identity(j.at("in_dim"));
  }
  throw DataError("layer_from_json: unknown kind");
}

json network_to_json(const NetworkSpec& spec, const nn::ParameterSet& params,
                     const nn::BatchNormState& bn) {
  json layers = json::array();
  for (const LayerSpec& l : spec.layers) layers.push_back(layer_to_json(l));

  json param_layers = json::array();
  for (const auto& lp : params.layers) {
    json j;
    if (lp.weight.numel() > 0) j["weight"] = tensor_to_json(lp.weight);
    if (lp.bias.numel() > 0) j["bias"] = tensor_to_json(lp.bias);
    param_layers.push_back(std::move(j));
  }

  json bn_layers = json::array();
  for (const auto& ls : bn.layers) {
    json j;
    if (!ls.running_mean.empty()) {
      j["running_mean"] = ls.running_mean;
      j["running_var"] = ls.running_var;
      j["initialized"] = ls.initialized;
    }
    bn_layers.push_back(std::move(j));
  }

  return json{{"spec", std::move(layers)},
              {"params", std::move(param_layers)},
              {"batchnorm",
               json{{"decay", bn.decay}, {"epsilon", bn.epsilon},
                    {"layers", std::move(bn_layers)}}}};
}

void network_from_json(const json& j, NetworkSpec& spec, nn::ParameterSet& params,
                       nn::BatchNormState& bn) {
  spec.layers.clear();
  for (const json& lj : j.at("spec")) spec.layers.push_back(layer_from_json(lj));
  spec.validate();

  params.layers.clear();
  for (const json& pj : j.at("params")) {
    nn::LayerParams lp;
    if (pj.contains("weight")) lp.weight = tensor_from_json(pj.at("weight"));
    if (pj.contains("bias")) lp.bias = tensor_from_json(pj.at("bias"));
    params.layers.push_back(std::move(lp));
  }

  const json& bj = j.at("batchnorm");
  bn.decay = bj.at("decay");
  bn.epsilon = bj.at("epsilon");
  bn.layers.clear();
  for (const json& lj : bj.at("layers")) {
    nn::BatchNormState::LayerState ls;
    if (lj.contains("running_mean")) {
      ls.running_mean = lj.at("running_mean").get<std::vector<double>>();
      ls.running_var = lj.at("running_var").get<std::vector<double>>();
      ls.initialized = lj.at("initialized");
    }
    bn.layers.push_back(std::move(ls));
  }
}

json model_to_json(const gan::GanModel& model) {
  return json{{"format", kModelFormat},
              {"version", kFormatVersion},
              {"history_len", model.history_len},
              {"horizon", model.horizon},
              {"latent_dim", model.latent_dim},
              {"generator", network_to_json(model.gen_spec, model.gen_params, model.gen_bn)},
              {"discriminator",
               network_to_json(model.dis_spec, model.dis_params, model.dis_bn)}};
}

gan::GanModel model_from_json(const json& j) {
  if (j.value("format", "") != kModelFormat) {
    throw DataError("model document is not in the " + std::string(kModelFormat) +
                    " format");
  }
  if (j.value("version", -1) != kFormatVersion) {
    throw DataError("unsupported model format version");
  }
  gan::GanModel model;
  model.history_len = j.at("history_len");
  model.horizon = j.at("horizon");
  model.latent_dim = j.at("latent_dim");
  network_from_json(j.at("generator"), model.gen_spec, model.gen_params, model.gen_bn);
  network_from_json(j.at("discriminator"), model.dis_spec, model.dis_params, model.dis_bn);
  model.validate();
  return model;
}

json rmsprop_to_json(const nn::RmsPropState& st) {
  json acc = json::array();
  for (const auto& lp : st.acc.layers) {
    json j;
    if (lp.weight.numel() > 0) j["weight"] = tensor_to_json(lp.weight);
    if (lp.bias.numel() > 0) j["bias"] = tensor_to_json(lp.bias);
    acc.push_back(std::move(j));
  }
  return json{{"rho", st.rho}, {"epsilon", st.epsilon}, {"acc", std::move(acc)}};
}

nn::RmsPropState rmsprop_from_json(const json& j) {
  nn::RmsPropState st;
  st.rho = j.at("rho");
  st.epsilon = j.at("epsilon");
  for (const json& pj : j.at("acc")) {
    nn::LayerParams lp;
    if (pj.contains("weight")) lp.weight = tensor_from_json(pj.at("weight"));
    if (pj.contains("bias")) lp.bias = tensor_from_json(pj.at("bias"));
    st.acc.layers.push_back(std::move(lp));
  }
  return st;
}

double json_to_double(const json& j) {
  // Non-finite doubles serialize as null.
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json problem_to_json(const forecast::ForecastProblem& p) {
  json j{{"hist", p.hist},
         {"point_forecast", p.point_forecast},
         {"alpha", p.alpha},
         {"alpha_sub", p.alpha_sub},
         {"beta", p.beta},
         {"gamma", p.gamma},
         {"num_scenarios", p.num_scenarios},
         {"init_iters", p.init_iters},
         {"scen_iters", p.scen_iters},
         {"step_size", p.step_size},
         {"momentum", p.momentum},
         {"forecast_floor", p.forecast_floor},
         {"max_restarts", p.max_restarts},
         {"max_backtracks", p.max_backtracks},
         {"seed", p.seed}};
  if (p.upper_cap.has_value()) {
    j["upper_cap"] = *p.upper_cap;
  } else {
    j["upper_cap"] = nullptr;
  }
  return j;
}

forecast::ForecastProblem problem_from_json(const json& j) {
  forecast::ForecastProblem p;
  p.hist = j.at("hist").get<std::vector<double>>();
  p.point_forecast = j.at("point_forecast").get<std::vector<double>>();
  p.alpha = j.at("alpha");
  p.alpha_sub = j.at("alpha_sub");
  p.beta = j.at("beta");
  p.gamma = j.at("gamma");
  p.num_scenarios = j.at("num_scenarios");
  p.init_iters = j.at("init_iters");
  p.scen_iters = j.at("scen_iters");
  p.step_size = j.at("step_size");
  p.momentum = j.at("momentum");
  p.forecast_floor = j.at("forecast_floor");
  p.max_restarts = j.at("max_restarts");
  p.max_backtracks = j.at("max_backtracks");
  p.seed = j.at("seed");
  if (!j.at("upper_cap").is_null()) p.upper_cap = j.at("upper_cap").get<double>();
  return p;
}

}  // namespace

std::string model_to_json_string(const gan::GanModel& model) {
  return model_to_json(model).dump(2) + "\n";
}

gan::GanModel model_from_json_string(const std::string& text) {
  return model_from_json(json::parse(text));
}

void save_model(const gan::GanModel& model, const std::string& path) {
  write_text_file(path, model_to_json_string(model));
}

gan::GanModel load_model(const std::string& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("load_model: invalid JSON in " + path);
  if (j.value("format", "") == kCheckpointFormat) {
    return model_from_json(j.at("model"));
  }
  return model_from_json(j);
}

std::string model_id(const gan::GanModel& model) {
  const std::string bytes = model_to_json(model).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void save_checkpoint(const gan::GanModel& model, const gan::TrainState& state,
                     const std::string& path) {
  json j{{"format", kCheckpointFormat},
         {"version", kFormatVersion},
         {"model", model_to_json(model)},
         {"train_state",
          json{{"next_iteration", state.next_iteration},
               {"rng_state", state.rng_state},
               {"dis_opt", rmsprop_to_json(state.dis_opt)},
               {"gen_opt", rmsprop_to_json(state.gen_opt)}}}};
  write_text_file(path, j.dump(2) + "\n");
}

void load_checkpoint(const std::string& path, gan::GanModel& model,
                     gan::TrainState& state) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("load_checkpoint: invalid JSON in " + path);
  if (j.value("format", "") != kCheckpointFormat) {
    throw DataError("load_checkpoint: not a " + std::string(kCheckpointFormat) +
                    " document");
  }
  if (j.value("version", -1) != kFormatVersion) {
    throw DataError("load_checkpoint: unsupported version");
  }
  model = model_from_json(j.at("model"));
  const json& ts = j.at("train_state");
  state.next_iteration = ts.at("next_iteration");
  state.rng_state = ts.at("rng_state");
  state.dis_opt = rmsprop_from_json(ts.at("dis_opt"));
  state.gen_opt = rmsprop_from_json(ts.at("gen_opt"));
  state.initialized = true;
}

void save_trainlog_csv(const gan::TrainLog& log, const std::string& path) {
  std::ostringstream out;
  out << "iteration,e_dx,e_dgz,loss_d,loss_g\n";
  for (const auto& r : log) {
    out << r.iteration << ',' << format_double(r.mean_d_real) << ','
        << format_double(r.mean_d_fake) << ',' << format_double(r.loss_d) << ','
        << format_double(r.loss_g) << '\n';
  }
  write_text_file(path, out.str());
}

void save_scenario_csv(const forecast::ScenarioSet& set, const std::string& path) {
  std::ostringstream out;
  out << "scenario_id,lead_index,value,feasible\n";
  for (std::size_t s = 0; s < set.scenarios.size(); ++s) {
    const auto& sc = set.scenarios[s];
    for (std::size_t i = 0; i < sc.values.size(); ++i) {
      out << s << ',' << (i + 1) << ',' << format_double(sc.values[i]) << ','
          << (sc.feasible ? 1 : 0) << '\n';
    }
  }
  write_text_file(path, out.str());
}

void save_scenario_json(const std::vector<ScenarioDocument>& docs,
                        const std::string& path) {
  json instances = json::array();
  for (const auto& doc : docs) {
    json scenarios = json::array();
    for (const auto& sc : doc.set.scenarios) {
      json sj{{"values", sc.values},
              {"latent", sc.latent},
              {"feasible", sc.feasible},
              {"restarts", sc.restarts}};
      sj["objective"] = std::isfinite(sc.objective) ? json(sc.objective) : json(nullptr);
      scenarios.push_back(std::move(sj));
    }
    json inst{{"method", doc.method},
              {"model_id", doc.set.model_id},
              {"seed", doc.set.seed},
              {"floor_applied", doc.set.floor_applied},
              {"origin_ts", doc.origin_ts},
              {"problem", problem_to_json(doc.set.problem)},
              {"scenarios", std::move(scenarios)}};
    if (!doc.realization.empty()) inst["realization"] = doc.realization;
    instances.push_back(std::move(inst));
  }
  json j{{"format", kScenarioFormat},
         {"version", kFormatVersion},
         {"instances", std::move(instances)}};
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<ScenarioDocument> load_scenario_json(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("load_scenario_json: invalid JSON in " + path);
  if (j.value("format", "") != kScenarioFormat || j.value("version", -1) != kFormatVersion) {
    throw DataError("load_scenario_json: not a " + std::string(kScenarioFormat) +
                    " v" + std::to_string(kFormatVersion) + " document");
  }
  std::vector<ScenarioDocument> docs;
  for (const json& inst : j.at("instances")) {
    ScenarioDocument doc;
    doc.method = inst.at("method");
    doc.set.model_id = inst.at("model_id");
    doc.set.seed = inst.at("seed");
    doc.set.floor_applied = inst.at("floor_applied");
    doc.origin_ts = inst.at("origin_ts");
    doc.set.problem = problem_from_json(inst.at("problem"));
    if (inst.contains("realization")) {
      doc.realization = inst.at("realization").get<std::vector<double>>();
    }
    for (const json& sj : inst.at("scenarios")) {
      forecast::Scenario sc;
      sc.values = sj.at("values").get<std::vector<double>>();
      sc.latent = sj.at("latent").get<std::vector<double>>();
      sc.feasible = sj.at("feasible");
      sc.restarts = sj.at("restarts");
      sc.objective = json_to_double(sj.at("objective"));
      doc.set.scenarios.push_back(std::move(sc));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_autocorr_csv(const metrics::AutocorrCurve& curve, const std::string& path) {
  std::ostringstream out;
  out << "lag,value\n";
  for (std::size_t k = 0; k < curve.values.size(); ++k) {
    out << k << ',' << format_double(curve.values[k]) << '\n';
  }
  write_text_file(path, out.str());
}

void save_pearson_csv(const metrics::CorrelationMatrix& matrix, const std::string& path) {
  std::ostringstream out;
  out << "i,j,rho\n";
  for (std::size_t i = 0; i < matrix.dim; ++i) {
    for (std::size_t j = 0; j < matrix.dim; ++j) {
      out << (i + 1) << ',' << (j + 1) << ',' << format_double(matrix.at(i, j)) << '\n';
    }
  }
  write_text_file(path, out.str());
}

void save_crps_csv(const std::vector<double>& curve, const std::string& path) {
  std::ostringstream out;
  out << "lead,value\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out << (k + 1) << ',' << format_double(curve[k]) << '\n';
  }
  write_text_file(path, out.str());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace scengen::io

#include "scengen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scengen/common.hpp"

namespace scengen::metrics {

AutocorrCurve autocorrelation(const std::vector<double>& series, std::size_t k_max) {
  const std::size_t n = series.size();
  if (n <= k_max) {
    throw ConfigError("autocorrelation: series length must exceed k_max");
  }
  if (*std::max_element(series.begin(), series.end()) ==
      *std::min_element(series.begin(), series.end())) {
    throw DataError("autocorrelation: constant series has undefined autocorrelation");
  }
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  AutocorrCurve curve;
  curve.values.resize(k_max + 1);
  curve.values[0] = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) {
      acc += (series[t] - mean) * (series[t + k] - mean);
    }
    curve.values[k] = acc / static_cast<double>(n) / var;
  }
  return curve;
}

AutocorrCurve mean_autocorrelation(const std::vector<std::vector<double>>& set,
                                   std::size_t k_max) {
  AutocorrCurve mean;
  mean.values.assign(k_max + 1, 0.0);
  std::size_t used = 0;
  for (const auto& series : set) {
    double lo = *std::min_element(series.begin(), series.end());
    double hi = *std::max_element(series.begin(), series.end());
    if (!(hi > lo)) continue;  // constant series carries no correlation signal
    AutocorrCurve c = autocorrelation(series, k_max);
    for (std::size_t k = 0; k <= k_max; ++k) mean.values[k] += c.values[k];
    ++used;
  }
  if (used == 0) {
    throw DataError("mean_autocorrelation: every series is constant");
  }
  for (double& v : mean.values) v /= static_cast<double>(used);
  return mean;
}

CorrelationMatrix pearson_matrix(const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 2) {
    throw ConfigError("pearson_matrix: need at least two vectors");
  }
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ShapeError("pearson_matrix: ragged input");
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> sd(dim, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double c = v[j] - mean[j];
      sd[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (sd[j] <= 0.0) {
      throw DataError("pearson_matrix: lead " + std::to_string(j) + " has zero variance");
    }
  }

  CorrelationMatrix m;
  m.dim = dim;
  m.rho.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m.rho[i * dim + i] = 1.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      double cov = 0.0;
      for (const auto& v : vectors) {
        cov += (v[i] - mean[i]) * (v[j] - mean[j]);
      }
      cov /= static_cast<double>(n);
      const double r = cov / (sd[i] * sd[j]);
      m.rho[i * dim + j] = r;
      m.rho[j * dim + i] = r;
    }
  }
  return m;
}

double crps(const std::vector<double>& scenario_values, double realization) {
  if (scenario_values.empty()) {
    throw ConfigError("crps: scenario list is empty");
  }
  if (!(realization >= 0.0 && realization <= 1.0)) {
    throw DataError("crps: realization must lie in [0,1]");
  }
  for (double v : scenario_values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("crps: scenario values must lie in [0,1]");
    }
  }

  std::vector<double> sorted = scenario_values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  // Breakpoints where either the step CDF or the indicator changes.
  std::vector<double> points;
  points.reserve(sorted.size() + 3);
  points.push_back(0.0);
  for (double v : sorted) points.push_back(v);
  points.push_back(realization);
  points.push_back(1.0);
  std::sort(points.begin(), points.end());

  double integral = 0.0;
  for (std::size_t s = 0; s + 1 < points.size(); ++s) {
    const double a = points[s];
    const double b = points[s + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double cdf =
        static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), mid) -
                            sorted.begin()) /
        n;
    const double ind = mid >= realization ? 1.0 : 0.0;
    integral += (cdf - ind) * (cdf - ind) * (b - a);
  }
  return integral;
}

std::vector<double> crps_curve(
    const std::vector<std::vector<std::vector<double>>>& scenario_sets,
    const std::vector<std::vector<double>>& realizations) {
  if (scenario_sets.size() != realizations.size()) {
    throw ShapeError("crps_curve: instance counts differ");
  }
  if (scenario_sets.empty()) {
    throw ConfigError("crps_curve: no instances");
  }
  const std::size_t k = realizations.front().size();
  std::vector<double> curve(k, 0.0);
  for (std::size_t t = 0; t < scenario_sets.size(); ++t) {
    if (realizations[t].size() != k) {
      throw ShapeError("crps_curve: realization " + std::to_string(t) +
                       " has mismatched horizon");
    }
    const auto& scenarios = scenario_sets[t];
    if (scenarios.empty()) {
      throw ConfigError("crps_curve: instance " + std::to_string(t) + " has no scenarios");
    }
    for (std::size_t lead = 0; lead < k; ++lead) {
      std::vector<double> values;
      values.reserve(scenarios.size());
      for (const auto& s : scenarios) {
        if (s.size() != k) {
          throw ShapeError("crps_curve: scenario with mismatched horizon in instance " +
                           std::to_string(t));
        }
        values.push_back(s[lead]);
      }
      curve[lead] += crps(values, realizations[t][lead]);
    }
  }
  for (double& v : curve) v /= static_cast<double>(scenario_sets.size());
  return curve;
}

}  // namespace scengen::metrics

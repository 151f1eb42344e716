#pragma once

#include <cstddef>
#include <vector>

namespace scengen::metrics {

/// Autocorrelation values for lags 0..k_max. R(0) is exactly 1.
struct AutocorrCurve {
  std::vector<double> values;

  std::size_t max_lag() const { return values.empty() ? 0 : values.size() - 1; }
  double at(std::size_t lag) const { return values[lag]; }
};

/// R(k) = autocov(k)/autocov(0) with divide-by-n autocovariances
/// around the full-series sample mean. Throws on a constant series.
AutocorrCurve autocorrelation(const std::vector<double>& series, std::size_t k_max);

/// Per-series curves averaged across a set; series with zero variance
/// are skipped (at least one series must survive).
AutocorrCurve mean_autocorrelation(const std::vector<std::vector<double>>& set,
                                   std::size_t k_max);

/// Symmetric lead-time correlation matrix with exact unit diagonal.
struct CorrelationMatrix {
  std::size_t dim = 0;
  std::vector<double> rho;  // row-major dim x dim

  double at(std::size_t i, std::size_t j) const { return rho[i * dim + j]; }
};

/// Sample Pearson coefficient per pair of lead times across a
/// collection of equal-length vectors. Throws when a lead has zero
/// variance (the message names the lead).
CorrelationMatrix pearson_matrix(const std::vector<std::vector<double>>& vectors);

/// Exact integral over [0,1] of (F(p) - 1{p >= realization})^2 where F
/// is the empirical step CDF of the scenario values. Values and the
/// realization must lie in [0,1].
double crps(const std::vector<double>& scenario_values, double realization);

/// Per-lead CRPS averaged over forecast instances. scenario_sets[t] is
/// the t-th instance's N x k value matrix; realizations[t] its
/// length-k outcome.
std::vector<double> crps_curve(
    const std::vector<std::vector<std::vector<double>>>& scenario_sets,
    const std::vector<std::vector<double>>& realizations);

}  // namespace scengen::metrics

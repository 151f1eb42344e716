#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "scengen/common.hpp"
#include "scengen/metrics.hpp"

namespace scengen::copula {

/// Empirical Gaussian copula over k forecast leads: per-lead empirical
/// marginals coupled through the sample correlation of rank-based
/// Gaussian scores.
struct CopulaModel {
  std::vector<std::vector<double>> marginals;  // per lead, sorted ascending
  metrics::CorrelationMatrix score_correlation;
  std::vector<double> cholesky;  // row-major lower-triangular factor
  double jitter = 0.0;           // diagonal regularization applied

  std::size_t dim() const { return marginals.size(); }
};

/// Lower-triangular Cholesky factor of a symmetric matrix, jittering
/// the diagonal (starting at 1e-8, growing tenfold) until the
/// factorization succeeds. Returns the factor and the jitter used.
std::pair<std::vector<double>, double> regularized_cholesky(
    const metrics::CorrelationMatrix& matrix);

/// Builds a model from explicit marginals and score correlation
/// (marginals are copied and sorted).
CopulaModel make_copula(std::vector<std::vector<double>> marginals,
                        metrics::CorrelationMatrix score_correlation);

/// Fits marginals and the Gaussian-score correlation from training
/// horizon segments (each of length k). Scores are
/// inverse-normal-transformed average ranks, rank/(n+1).
CopulaModel fit_copula(const std::vector<std::vector<double>>& horizon_windows,
                       std::size_t k);

/// Draws n scenarios: correlated standard normals through the Cholesky
/// factor, mapped through the normal CDF and each lead's
/// interpolated inverse empirical marginal.
std::vector<std::vector<double>> sample_copula(const CopulaModel& model, std::size_t n,
                                               Rng& rng);

/// Inverse empirical CDF with linear interpolation between order
/// statistics at plotting positions i/(n+1). Clamped to the sample
/// range.
double empirical_quantile(const std::vector<double>& sorted_values, double u);

}  // namespace scengen::copula

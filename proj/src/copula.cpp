#include "scengen/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace scengen::copula {

namespace {

/// Average ranks (1-based, ties averaged).
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

bool try_cholesky(const std::vector<double>& a, std::size_t n, std::vector<double>& l) {
  l.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t t = 0; t < j; ++t) s -= l[i * n + t] * l[j * n + t];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return true;
}

}  // namespace

std::pair<std::vector<double>, double> regularized_cholesky(
    const metrics::CorrelationMatrix& matrix) {
  const std::size_t n = matrix.dim;
  std::vector<double> a = matrix.rho;
  std::vector<double> l;
  if (try_cholesky(a, n, l)) return {l, 0.0};
  double jitter = 1e-8;
  for (int attempt = 0; attempt < 20; ++attempt) {
    std::vector<double> aj = matrix.rho;
    for (std::size_t i = 0; i < n; ++i) aj[i * n + i] += jitter;
    if (try_cholesky(aj, n, l)) return {l, jitter};
    jitter *= 10.0;
  }
  throw NumericError("regularized_cholesky: matrix not positive definite after jitter");
}

CopulaModel make_copula(std::vector<std::vector<double>> marginals,
                        metrics::CorrelationMatrix score_correlation) {
  if (marginals.empty() || marginals.size() != score_correlation.dim) {
    throw ShapeError("make_copula: marginal count must equal correlation dimension");
  }
  CopulaModel m;
  m.marginals = std::move(marginals);
  for (auto& col : m.marginals) {
    if (col.empty()) throw DataError("make_copula: empty marginal");
    std::sort(col.begin(), col.end());
  }
  m.score_correlation = std::move(score_correlation);
  auto [l, jitter] = regularized_cholesky(m.score_correlation);
  m.cholesky = std::move(l);
  m.jitter = jitter;
  return m;
}

CopulaModel fit_copula(const std::vector<std::vector<double>>& horizon_windows,
                       std::size_t k) {
  if (k == 0) throw ConfigError("fit_copula: k must be positive");
  if (horizon_windows.size() < k + 1) {
    throw DataError("fit_copula: need at least k+1 training windows");
  }
  const std::size_t n = horizon_windows.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (horizon_windows[i].size() != k) {
      throw ShapeError("fit_copula: window " + std::to_string(i) + " has length " +
                       std::to_string(horizon_windows[i].size()) + ", expected " +
                       std::to_string(k));
    }
  }

  std::vector<std::vector<double>> marginals(k, std::vector<double>(n));
  std::vector<std::vector<double>> scores(n, std::vector<double>(k));
  for (std::size_t lead = 0; lead < k; ++lead) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = horizon_windows[i][lead];
    if (*std::max_element(column.begin(), column.end()) ==
        *std::min_element(column.begin(), column.end())) {
      throw DataError("fit_copula: lead " + std::to_string(lead) +
                      " is constant; its marginal is degenerate");
    }
    marginals[lead] = column;
    std::sort(marginals[lead].begin(), marginals[lead].end());
    std::vector<double> ranks = average_ranks(column);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i][lead] = inverse_normal_cdf(ranks[i] / static_cast<double>(n + 1));
    }
  }

  return make_copula(std::move(marginals), metrics::pearson_matrix(scores));
}

double empirical_quantile(const std::vector<double>& sorted_values, double u) {
  const std::size_t n = sorted_values.size();
  if (n == 0) throw DataError("empirical_quantile: empty marginal");
  // Plotting positions u_i = i/(n+1), i = 1..n.
  const double pos = u * static_cast<double>(n + 1);
  if (pos <= 1.0) return sorted_values.front();
  if (pos >= static_cast<double>(n)) return sorted_values.back();
  const std::size_t i = static_cast<std::size_t>(pos);  // 1..n-1
  const double frac = pos - static_cast<double>(i);
  return sorted_values[i - 1] + frac * (sorted_values[i] - sorted_values[i - 1]);
}

std::vector<std::vector<double>> sample_copula(const CopulaModel& model, std::size_t n,
                                               Rng& rng) {
  const std::size_t k = model.dim();
  if (k == 0 || model.cholesky.size() != k * k) {
    throw ConfigError("sample_copula: model is not fitted");
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(k));
  std::vector<double> eps(k);
  for (std::size_t s = 0; s < n; ++s) {
    for (double& e : eps) e = rng.normal();
    for (std::size_t i = 0; i < k; ++i) {
      double w = 0.0;
      for (std::size_t j = 0; j <= i; ++j) w += model.cholesky[i * k + j] * eps[j];
      out[s][i] = empirical_quantile(model.marginals[i], normal_cdf(w));
    }
  }
  return out;
}

}  // namespace scengen::copula

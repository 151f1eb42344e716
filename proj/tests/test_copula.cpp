#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scengen/copula.hpp"
#include "test_util.hpp"

using namespace scengen;

namespace {

/// Gaussian scores of a sample column via the rank/(n+1) transform,
/// recomputed independently of the fitting code.
std::vector<double> column_scores(const std::vector<std::vector<double>>& rows,
                                  std::size_t col) {
  const std::size_t n = rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a][col] < rows[b][col];
  });
  std::vector<double> scores(n);
  for (std::size_t r = 0; r < n; ++r) {
    scores[order[r]] =
        inverse_normal_cdf(static_cast<double>(r + 1) / static_cast<double>(n + 1));
  }
  return scores;
}

metrics::CorrelationMatrix identity_correlation(std::size_t k) {
  metrics::CorrelationMatrix m;
  m.dim = k;
  m.rho.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) m.rho[i * k + i] = 1.0;
  return m;
}

}  // namespace

TEST_CASE("fit_copula: independent leads stay decorrelated") {
  Rng rng(1);
  std::vector<std::vector<double>> windows(10000, std::vector<double>(4));
  for (auto& w : windows) {
    for (double& v : w) v = rng.uniform01();
  }
  auto model = copula::fit_copula(windows, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i != j) CHECK(std::abs(model.score_correlation.at(i, j)) < 0.05);
    }
  }
}

TEST_CASE("fit_copula: comonotone leads give correlation near one") {
  Rng rng(2);
  std::vector<std::vector<double>> windows(500, std::vector<double>(3));
  for (auto& w : windows) {
    const double v = rng.uniform01();
    w = {v, v, v};
  }
  auto model = copula::fit_copula(windows, 3);
  CHECK(model.score_correlation.at(0, 1) > 0.99);
  CHECK(model.score_correlation.at(1, 2) > 0.99);
  CHECK(model.jitter > 0.0);  // rank-1 matrix needs regularization
}

TEST_CASE("fit_copula is deterministic and validates input") {
  Rng rng(3);
  std::vector<std::vector<double>> windows(50, std::vector<double>(2));
  for (auto& w : windows) {
    for (double& v : w) v = rng.uniform01();
  }
  auto a = copula::fit_copula(windows, 2);
  auto b = copula::fit_copula(windows, 2);
  CHECK(a.score_correlation.rho == b.score_correlation.rho);
  CHECK(a.cholesky == b.cholesky);
  CHECK(a.marginals == b.marginals);

  CHECK_THROWS_AS(copula::fit_copula({{0.1, 0.2}}, 2), DataError);
  std::vector<std::vector<double>> degenerate(20, std::vector<double>{0.5, 0.3});
  degenerate[0][1] = 0.31;
  CHECK_THROWS_AS(copula::fit_copula(degenerate, 2), DataError);
}

TEST_CASE("cholesky factor reproduces the regularized matrix") {
  Rng rng(5);
  std::vector<std::vector<double>> windows(2000, std::vector<double>(5));
  for (auto& w : windows) {
    double prev = rng.uniform01();
    for (double& v : w) {
      prev = 0.6 * prev + 0.4 * rng.uniform01();
      v = prev;
    }
  }
  auto model = copula::fit_copula(windows, 5);
  const std::size_t k = 5;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        acc += model.cholesky[i * k + t] * model.cholesky[j * k + t];
      }
      double target = model.score_correlation.at(i, j);
      if (i == j) target += model.jitter;
      CHECK(std::abs(acc - target) < 1e-8);
    }
  }
}

TEST_CASE("sample_copula: constant marginal collapses to its value") {
  copula::CopulaModel model =
      copula::make_copula({{0.5}, {0.5, 0.5}}, identity_correlation(2));
  Rng rng(7);
  auto samples = copula::sample_copula(model, 50, rng);
  for (const auto& s : samples) {
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
  }
}

TEST_CASE("sample_copula determinism and range") {
  Rng rng(11);
  std::vector<std::vector<double>> windows(300, std::vector<double>(3));
  for (auto& w : windows) {
    for (double& v : w) v = rng.uniform(0.2, 0.8);
  }
  auto model = copula::fit_copula(windows, 3);
  Rng a(13), b(13);
  auto s1 = copula::sample_copula(model, 40, a);
  auto s2 = copula::sample_copula(model, 40, b);
  CHECK(s1 == s2);
  for (const auto& s : s1) {
    for (std::size_t lead = 0; lead < 3; ++lead) {
      CHECK(s[lead] >= model.marginals[lead].front());
      CHECK(s[lead] <= model.marginals[lead].back());
    }
  }
}

TEST_CASE("sampled marginals pass a two-sample KS test at 5%") {
  Rng rng(17);
  const std::size_t n_train = 2000;
  std::vector<std::vector<double>> windows(n_train, std::vector<double>(3));
  for (auto& w : windows) {
    // Mixed shapes per lead: uniform, squared, shifted.
    w[0] = rng.uniform01();
    w[1] = rng.uniform01() * rng.uniform01();
    w[2] = 0.3 + 0.5 * rng.uniform01();
  }
  auto model = copula::fit_copula(windows, 3);
  Rng srng(19);
  auto samples = copula::sample_copula(model, 5000, srng);
  for (std::size_t lead = 0; lead < 3; ++lead) {
    std::vector<double> train_col(n_train), sample_col(samples.size());
    for (std::size_t i = 0; i < n_train; ++i) train_col[i] = windows[i][lead];
    for (std::size_t i = 0; i < samples.size(); ++i) sample_col[i] = samples[i][lead];
    CHECK(testutil::ks_pass_5pct(sample_col, train_col));
  }
}

TEST_CASE("round trip: sample score correlation matches the fitted one") {
  Rng rng(23);
  std::vector<std::vector<double>> windows(4000, std::vector<double>(3));
  for (auto& w : windows) {
    const double shared = rng.normal();
    w[0] = normal_cdf(shared + 0.8 * rng.normal());
    w[1] = normal_cdf(shared + 0.8 * rng.normal());
    w[2] = normal_cdf(rng.normal());
  }
  auto model = copula::fit_copula(windows, 3);
  Rng srng(29);
  auto samples = copula::sample_copula(model, 10000, srng);

  std::vector<std::vector<double>> scores(samples.size(), std::vector<double>(3));
  for (std::size_t lead = 0; lead < 3; ++lead) {
    auto col = column_scores(samples, lead);
    for (std::size_t i = 0; i < samples.size(); ++i) scores[i][lead] = col[i];
  }
  auto sampled_corr = metrics::pearson_matrix(scores);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(sampled_corr.at(i, j) - model.score_correlation.at(i, j)) < 0.05);
    }
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "scengen/data.hpp"
#include "scengen/model_io.hpp"

using namespace scengen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("scengen_data_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("timestamp parsing and formatting") {
  CHECK(data::parse_timestamp("1970-01-01 00:00:00") == 0);
  CHECK(data::parse_timestamp("2007-01-01 00:00:00") == 1167609600);
  CHECK(data::parse_timestamp("2007-01-01T00:05:00") == 1167609900);
  CHECK(data::parse_timestamp("1167609600") == 1167609600);
  CHECK(data::format_timestamp(1167609900) == "2007-01-01 00:05:00");
  CHECK(data::parse_timestamp(data::format_timestamp(1234567890)) == 1234567890);
  CHECK_THROWS_AS(data::parse_timestamp("yesterday"), DataError);
}

TEST_CASE("load_csv basics") {
  TempDir dir;
  const std::string p = dir.file("series.csv");
  write(p,
        "timestamp,power\n"
        "2007-01-01 00:00:00,1.5\n"
        "2007-01-01 00:05:00,2.25\n"
        "2007-01-01 00:10:00,0\n");
  data::PowerSeries s = data::load_csv(p);
  REQUIRE(s.size() == 3);
  CHECK(s.values[1] == 2.25);
  CHECK(s.step_seconds() == 300);
  CHECK_FALSE(s.has_forecasts());
}

TEST_CASE("load_csv rejects malformed input") {
  TempDir dir;
  const std::string gap = dir.file("gap.csv");
  write(gap,
        "timestamp,power\n"
        "2007-01-01 00:00:00,1\n"
        "2007-01-01 00:05:00,1\n"
        "2007-01-01 00:20:00,1\n");
  CHECK_THROWS_WITH_AS(data::load_csv(gap), doctest::Contains("row 4"), DataError);

  const std::string neg = dir.file("neg.csv");
  write(neg, "timestamp,power\n0,-1\n");
  CHECK_THROWS_AS(data::load_csv(neg), DataError);

  const std::string head = dir.file("head.csv");
  write(head, "time,value\n0,1\n");
  CHECK_THROWS_AS(data::load_csv(head), DataError);

  const std::string nan = dir.file("nan.csv");
  write(nan, "timestamp,power\n0,nan\n");
  CHECK_THROWS_AS(data::load_csv(nan), DataError);
}

TEST_CASE("save/load round trip is bit exact") {
  TempDir dir;
  data::SyntheticConfig cfg;
  cfg.length = 100;
  cfg.seed = 5;
  data::PowerSeries s = data::synth_generate(cfg);
  s.forecasts = s.values;  // exercise the forecast column too
  const std::string p1 = dir.file("a.csv"), p2 = dir.file("b.csv");
  data::save_csv(s, p1);
  data::PowerSeries loaded = data::load_csv(p1);
  CHECK(loaded.values == s.values);
  CHECK(loaded.forecasts == s.forecasts);
  CHECK(loaded.timestamps == s.timestamps);
  data::save_csv(loaded, p2);
  CHECK(io::read_text_file(p1) == io::read_text_file(p2));
}

TEST_CASE("normalize divides by capacity") {
  data::PowerSeries s;
  s.timestamps = {0, 300};
  s.values = {8.0, 16.0};
  s.capacity = 16.0;
  data::PowerSeries n = data::normalize(s);
  CHECK(n.values[0] == 0.5);
  CHECK(n.values[1] == 1.0);
  CHECK(n.capacity == 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(n.values[i] * 16.0 - s.values[i]) <= 1e-15 * std::abs(s.values[i]));
  }

  // Idempotent at capacity 1.
  data::PowerSeries again = data::normalize(n);
  CHECK(again.values == n.values);

  // Zero series stays zero.
  data::PowerSeries z;
  z.timestamps = {0, 300};
  z.values = {0.0, 0.0};
  z.capacity = 10.0;
  CHECK(data::normalize(z).values == std::vector<double>{0.0, 0.0});

  s.values[0] = 20.0;  // above capacity
  CHECK_THROWS_AS(data::normalize(s), DataError);
}

TEST_CASE("window arithmetic") {
  data::PowerSeries s;
  for (int i = 0; i < 5; ++i) {
    s.timestamps.push_back(i * 300);
    s.values.push_back(0.1 * (i + 1));
  }
  auto w1 = data::make_windows(s, 1, 3, 1);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0].history == std::vector<double>(s.values.begin(), s.values.begin() + 2));
  CHECK(w1[0].horizon == std::vector<double>(s.values.begin() + 2, s.values.end()));
  CHECK(w1[0].forecast == std::vector<double>(3, s.values[1]));  // persistence

  s.timestamps.push_back(5 * 300);
  s.values.push_back(0.6);
  auto w2 = data::make_windows(s, 1, 3, 1);
  REQUIRE(w2.size() == 2);
  CHECK(w2[1].origin_index == 1);
  CHECK(w2[1].history == std::vector<double>(s.values.begin() + 1, s.values.begin() + 3));

  data::PowerSeries tiny;
  tiny.timestamps = {0, 300};
  tiny.values = {0.1, 0.2};
  CHECK_THROWS_AS(data::make_windows(tiny, 1, 3, 1), DataError);
}

TEST_CASE("windows are verbatim slices") {
  data::SyntheticConfig cfg;
  cfg.length = 200;
  cfg.seed = 9;
  data::PowerSeries s = data::synth_generate(cfg);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = rng.index(4);
    const std::size_t k = 1 + rng.index(5);
    const std::size_t stride = 1 + rng.index(3);
    auto windows = data::make_windows(s, h, k, stride);
    CHECK(windows.size() == (s.size() - (h + k + 1)) / stride + 1);
    for (const auto& w : windows) {
      auto full = w.full();
      for (std::size_t i = 0; i < full.size(); ++i) {
        CHECK(full[i] == s.values[w.origin_index + i]);
      }
    }
  }
}

TEST_CASE("split_by_day partitions whole days") {
  // Ten days of hourly data, day-aligned windows.
  data::PowerSeries s;
  for (int i = 0; i < 24 * 10; ++i) {
    s.timestamps.push_back(i * 3600);
    s.values.push_back(0.5);
  }
  auto windows = data::make_windows(s, 3, 4, 24);  // one window per day
  REQUIRE(windows.size() >= 10);
  auto split = data::split_by_day(windows, 0.9, 1);

  std::set<std::int64_t> train_days, test_days;
  for (const auto& w : split.train) train_days.insert(w.origin_ts / 86400);
  for (const auto& w : split.test) test_days.insert(w.origin_ts / 86400);
  CHECK(train_days.size() == 9);
  CHECK(test_days.size() == 1);
  for (std::int64_t d : test_days) CHECK(train_days.count(d) == 0);
  CHECK(split.train.size() + split.test.size() + split.dropped == windows.size());

  // Deterministic under the seed.
  auto split2 = data::split_by_day(windows, 0.9, 1);
  CHECK(split2.train.size() == split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(split2.train[i].origin_ts == split.train[i].origin_ts);
  }

  CHECK_THROWS_AS(data::split_by_day(data::make_windows(s, 1, 2, 1000), 0.9, 1),
                  DataError);  // single day only
}

TEST_CASE("synthetic series") {
  data::SyntheticConfig flat;
  flat.length = 50;
  flat.noise_std = 0.0;
  flat.diurnal_amplitude = 0.0;
  flat.seed = 1;
  data::PowerSeries s = data::synth_generate(flat);
  for (double v : s.values) CHECK(v == flat.base_level);

  data::SyntheticConfig ar;
  ar.length = 100000;
  ar.ar_coeff = 0.9;
  ar.noise_std = 0.05;
  ar.diurnal_amplitude = 0.0;
  ar.clip_to_unit = false;
  ar.seed = 2;
  data::PowerSeries rho = data::synth_generate(ar);
  // Direct lag-1 sample autocorrelation against the AR(1) oracle.
  double mean = 0.0;
  for (double v : rho.values) mean += v;
  mean /= static_cast<double>(rho.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < rho.size(); ++t) {
    den += (rho.values[t] - mean) * (rho.values[t] - mean);
    if (t + 1 < rho.size()) num += (rho.values[t] - mean) * (rho.values[t + 1] - mean);
  }
  const double r1 = num / den;
  CHECK(r1 > 0.87);
  CHECK(r1 < 0.93);

  data::PowerSeries again = data::synth_generate(ar);
  CHECK(again.values == rho.values);
}

TEST_CASE("persistence forecast") {
  data::PowerSeries s;
  s.timestamps = {0, 300, 600};
  s.values = {0.1, 0.25, 0.4};
  CHECK(data::persistence_forecast(s, 2, 3) == std::vector<double>{0.4, 0.4, 0.4});
  CHECK(data::persistence_forecast(s, 0, 2).size() == 2);
  CHECK_THROWS_AS(data::persistence_forecast(s, 3, 2), DataError);
}

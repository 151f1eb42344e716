#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scengen/common.hpp"

namespace scengen::data {

/// Uniformly spaced generation measurements with an optional paired
/// point-forecast column. Values are raw until normalize() divides by
/// the nominal capacity.
struct PowerSeries {
  std::vector<std::int64_t> timestamps;  // epoch seconds, uniform spacing
  std::vector<double> values;
  std::vector<double> forecasts;  // empty when absent
  double capacity = 1.0;

  std::size_t size() const { return values.size(); }
  bool has_forecasts() const { return !forecasts.empty(); }
  std::int64_t step_seconds() const;
  void validate() const;
};

/// One training/forecast sample cut from a normalized series:
/// history of length h+1 followed by a horizon of length k, with the
/// paired point forecast for the horizon.
struct Window {
  std::vector<double> history;   // h+1 values
  std::vector<double> horizon;   // k values
  std::vector<double> forecast;  // k values
  std::int64_t origin_ts = 0;    // timestamp of the first element
  std::int64_t end_ts = 0;       // timestamp of the last element
  std::size_t origin_index = 0;

  /// history + horizon, a verbatim series slice of length h+k+1.
  std::vector<double> full() const;
};

struct SyntheticConfig {
  double ar_coeff = 0.8;          // |rho| < 1
  double diurnal_amplitude = 0.2;
  double noise_std = 0.05;
  double base_level = 0.5;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  bool clip_to_unit = true;
  std::int64_t step_seconds = 300;
  std::int64_t start_ts = 1167609600;  // 2007-01-01 00:00:00 UTC

  void validate() const;
};

/// Reads "timestamp,power[,forecast]" rows. Timestamps are epoch
/// seconds or "YYYY-MM-DD HH:MM:SS". Spacing must be uniform; power
/// must be finite and nonnegative.
PowerSeries load_csv(const std::string& path);

/// Writes the canonical CSV schema; values round-trip bit-exactly.
void save_csv(const PowerSeries& series, const std::string& path);

/// Divides values (and forecasts) by capacity; the result carries
/// capacity 1. Values above capacity are rejected.
PowerSeries normalize(const PowerSeries& series);

/// Sliding windows at the given stride over a normalized series.
std::vector<Window> make_windows(const PowerSeries& series, std::size_t h, std::size_t k,
                                 std::size_t stride = 1);

struct SplitResult {
  std::vector<Window> train;
  std::vector<Window> test;
  std::size_t dropped = 0;  // windows whose span crosses the partition
};

/// Assigns whole calendar days to train/test by seeded shuffle
/// (train fraction = ratio), keyed on each window's starting day.
/// Windows spanning into the other partition are dropped.
SplitResult split_by_day(const std::vector<Window>& windows, double ratio,
                         std::uint64_t seed);

/// x_t = clip(base + amplitude*sin(2*pi*t/steps_per_day) + e_t, 0, 1)
/// with AR(1) residual e_t = rho*e_{t-1} + noise. The residual starts
/// from its stationary distribution.
PowerSeries synth_generate(const SyntheticConfig& config);

/// Last-value persistence: k copies of values[origin_index].
std::vector<double> persistence_forecast(const PowerSeries& series,
                                         std::size_t origin_index, std::size_t k);

/// Epoch seconds -> "YYYY-MM-DD HH:MM:SS" (UTC) and back.
std::string format_timestamp(std::int64_t epoch_seconds);
std::int64_t parse_timestamp(const std::string& text);

}  // namespace scengen::data

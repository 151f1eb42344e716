#include "scengen/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace scengen::data {

namespace {

// Civil <-> day-count conversion (proleptic Gregorian, UTC).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
  y += (m <= 2);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  return fields;
}

}  // namespace

std::string format_timestamp(std::int64_t epoch_seconds) {
  const std::int64_t days = floor_div(epoch_seconds, 86400);
  std::int64_t rem = epoch_seconds - days * 86400;
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[72];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

std::int64_t parse_timestamp(const std::string& text) {
  const std::string t = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (std::sscanf(t.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 5 ||
      std::sscanf(t.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 5) {
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        s < 0 || s > 60) {
      throw DataError("parse_timestamp: out-of-range field in '" + t + "'");
    }
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + s;
  }
  // Plain epoch seconds.
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(t, &pos);
    if (pos == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("parse_timestamp: cannot parse '" + t + "'");
}

std::int64_t PowerSeries::step_seconds() const {
  if (timestamps.size() < 2) return 0;
  return timestamps[1] - timestamps[0];
}

void PowerSeries::validate() const {
  if (values.empty()) throw DataError("PowerSeries: empty series");
  if (timestamps.size() != values.size()) {
    throw DataError("PowerSeries: timestamp/value count mismatch");
  }
  if (!forecasts.empty() && forecasts.size() != values.size()) {
    throw DataError("PowerSeries: forecast column length mismatch");
  }
  if (!(capacity > 0.0)) throw DataError("PowerSeries: capacity must be positive");
  const std::int64_t step = step_seconds();
  if (timestamps.size() >= 2 && step <= 0) {
    throw DataError("PowerSeries: timestamps must increase");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] - timestamps[i - 1] != step) {
      throw DataError("PowerSeries: non-uniform spacing at row " + std::to_string(i + 1));
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw DataError("PowerSeries: invalid power at row " + std::to_string(i + 1));
    }
  }
}

PowerSeries load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("load_csv: empty file " + path);
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "timestamp" || header[1] != "power" ||
      (header.size() == 3 && header[2] != "forecast") || header.size() > 3) {
    throw DataError("load_csv: header must be 'timestamp,power[,forecast]'");
  }
  const bool with_forecast = header.size() == 3;

  PowerSeries series;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("load_csv: row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    series.timestamps.push_back(parse_timestamp(fields[0]));
    double power;
    try {
      power = parse_double(fields[1]);
    } catch (const DataError&) {
      throw DataError("load_csv: bad power value at row " + std::to_string(row));
    }
    if (!std::isfinite(power)) {
      throw DataError("load_csv: non-finite power at row " + std::to_string(row));
    }
    if (power < 0.0) {
      throw DataError("load_csv: negative power at row " + std::to_string(row));
    }
    series.values.push_back(power);
    if (with_forecast) series.forecasts.push_back(parse_double(fields[2]));
  }
  if (series.values.empty()) throw DataError("load_csv: no data rows in " + path);

  const std::int64_t step = series.step_seconds();
  for (std::size_t i = 1; i < series.timestamps.size(); ++i) {
    if (series.timestamps[i] - series.timestamps[i - 1] != step || step <= 0) {
      throw DataError("load_csv: non-uniform timestamp spacing at row " +
                      std::to_string(i + 2));
    }
  }
  return series;
}

void save_csv(const PowerSeries& series, const std::string& path) {
  series.validate();
  std::ofstream out(path);
  if (!out) throw DataError("save_csv: cannot open " + path + " for writing");
  out << (series.has_forecasts() ? "timestamp,power,forecast\n" : "timestamp,power\n");
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_timestamp(series.timestamps[i]) << ',' << format_double(series.values[i]);
    if (series.has_forecasts()) out << ',' << format_double(series.forecasts[i]);
    out << '\n';
  }
  if (!out) throw DataError("save_csv: write failed for " + path);
}

PowerSeries normalize(const PowerSeries& series) {
  series.validate();
  PowerSeries out = series;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.values[i] > out.capacity) {
      throw DataError("normalize: value at row " + std::to_string(i + 1) +
                      " exceeds capacity");
    }
    out.values[i] /= out.capacity;
  }
  for (double& f : out.forecasts) f /= out.capacity;
  out.capacity = 1.0;
  return out;
}

std::vector<Window> make_windows(const PowerSeries& series, std::size_t h, std::size_t k,
                                 std::size_t stride) {
  series.validate();
  if (k == 0) throw ConfigError("make_windows: horizon k must be >= 1");
  if (stride == 0) throw ConfigError("make_windows: stride must be >= 1");
  const std::size_t wlen = h + k + 1;
  if (series.size() < wlen) {
    throw DataError("make_windows: series length " + std::to_string(series.size()) +
                    " shorter than window " + std::to_string(wlen));
  }
  for (double v : series.values) {
    if (v > 1.0) {
      throw DataError("make_windows: series is not normalized to [0,1]");
    }
  }

  std::vector<Window> windows;
  const std::size_t count = (series.size() - wlen) / stride + 1;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t o = w * stride;
    Window win;
    win.origin_index = o;
    win.origin_ts = series.timestamps[o];
    win.end_ts = series.timestamps[o + wlen - 1];
    win.history.assign(series.values.begin() + static_cast<std::ptrdiff_t>(o),
                       series.values.begin() + static_cast<std::ptrdiff_t>(o + h + 1));
    win.horizon.assign(series.values.begin() + static_cast<std::ptrdiff_t>(o + h + 1),
                       series.values.begin() + static_cast<std::ptrdiff_t>(o + wlen));
    if (series.has_forecasts()) {
      win.forecast.assign(
          series.forecasts.begin() + static_cast<std::ptrdiff_t>(o + h + 1),
          series.forecasts.begin() + static_cast<std::ptrdiff_t>(o + wlen));
    } else {
      win.forecast.assign(k, series.values[o + h]);  // last-value persistence
    }
    windows.push_back(std::move(win));
  }
  return windows;
}

std::vector<double> Window::full() const {
  std::vector<double> v = history;
  v.insert(v.end(), horizon.begin(), horizon.end());
  return v;
}

SplitResult split_by_day(const std::vector<Window>& windows, double ratio,
                         std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split_by_day: ratio must lie in (0,1)");
  }
  std::vector<std::int64_t> days;
  for (const Window& w : windows) {
    const std::int64_t d0 = floor_div(w.origin_ts, 86400);
    const std::int64_t d1 = floor_div(w.end_ts, 86400);
    for (std::int64_t d = d0; d <= d1; ++d) days.push_back(d);
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  if (days.size() < 2) {
    throw DataError("split_by_day: need at least 2 distinct days");
  }

  Rng rng(seed);
  for (std::size_t i = days.size(); i > 1; --i) {  // Fisher-Yates
    std::swap(days[i - 1], days[rng.index(i)]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      ratio * static_cast<double>(days.size()) + 1e-9);
  n_train = std::clamp<std::size_t>(n_train, 1, days.size() - 1);

  std::vector<std::int64_t> train_days(days.begin(),
                                       days.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(train_days.begin(), train_days.end());
  auto in_train = [&](std::int64_t d) {
    return std::binary_search(train_days.begin(), train_days.end(), d);
  };

  SplitResult res;
  for (const Window& w : windows) {
    const std::int64_t d0 = floor_div(w.origin_ts, 86400);
    const std::int64_t d1 = floor_div(w.end_ts, 86400);
    bool any_train = false, any_test = false;
    for (std::int64_t d = d0; d <= d1; ++d) {
      (in_train(d) ? any_train : any_test) = true;
    }
    if (any_train && any_test) {
      ++res.dropped;
    } else if (any_train) {
      res.train.push_back(w);
    } else {
      res.test.push_back(w);
    }
  }
  return res;
}

void SyntheticConfig::validate() const {
  if (!(std::abs(ar_coeff) < 1.0)) {
    throw ConfigError("SyntheticConfig: |ar_coeff| must be < 1");
  }
  if (length == 0) throw ConfigError("SyntheticConfig: length must be positive");
  if (noise_std < 0.0 || diurnal_amplitude < 0.0) {
    throw ConfigError("SyntheticConfig: amplitudes must be nonnegative");
  }
  if (step_seconds <= 0) throw ConfigError("SyntheticConfig: step_seconds must be positive");
}

PowerSeries synth_generate(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const double steps_per_day = 86400.0 / static_cast<double>(config.step_seconds);
  const double stationary_std =
      config.noise_std / std::sqrt(1.0 - config.ar_coeff * config.ar_coeff);

  PowerSeries series;
  series.capacity = 1.0;
  series.timestamps.reserve(config.length);
  series.values.reserve(config.length);

  double e = rng.normal(0.0, stationary_std);
  for (std::size_t t = 0; t < config.length; ++t) {
    if (t > 0) e = config.ar_coeff * e + rng.normal(0.0, config.noise_std);
    const double diurnal = config.diurnal_amplitude *
                           std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                    steps_per_day);
    double x = config.base_level + diurnal + e;
    if (config.clip_to_unit) x = std::clamp(x, 0.0, 1.0);
    series.values.push_back(x);
    series.timestamps.push_back(config.start_ts +
                                static_cast<std::int64_t>(t) * config.step_seconds);
  }
  return series;
}

std::vector<double> persistence_forecast(const PowerSeries& series,
                                         std::size_t origin_index, std::size_t k) {
  if (origin_index >= series.size()) {
    throw DataError("persistence_forecast: origin index out of range");
  }
  if (k == 0) throw ConfigError("persistence_forecast: k must be >= 1");
  return std::vector<double>(k, series.values[origin_index]);
}

}  // namespace scengen::data

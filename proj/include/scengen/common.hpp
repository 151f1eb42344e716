#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace scengen {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, parameters, or usage. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/network geometry mismatch.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed or inconsistent input data. CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed numerical procedure. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF for p in (0,1). Acklam's rational
/// approximation followed by one Halley refinement step.
double inverse_normal_cdf(double p);

/// Deterministic random source. All draws are derived from raw
/// mt19937_64 output through fixed arithmetic, so sequences are
/// reproducible bit-for-bit for a given seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from (seed, stream_id).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  /// Uniform draw strictly inside (0, 1).
  double uniform01();

  /// Uniform draw strictly inside (lo, hi).
  double uniform(double lo, double hi);

  /// Normal draw via inverse-CDF transform.
  double normal(double mean = 0.0, double stddev = 1.0);

  /// Unbiased uniform index in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t next_u64();

  /// Engine state as text, for checkpointing.
  std::string save_state() const;
  void load_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

/// Strict full-string double parse.
double parse_double(const std::string& text);

/// Runs fn(i) for i in [0, n). Uses `threads` workers when > 1;
/// results must not depend on execution order.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Thread count from the SCENGEN_THREADS environment variable, default 1.
std::size_t env_thread_count();

}  // namespace scengen

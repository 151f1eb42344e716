#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace scengen::nn {

/// Dense row-major array of 64-bit floats. Shape dimensions are
/// positive; product(shape) == data.size().
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::initializer_list<std::size_t> dims, std::vector<double> values);
  Tensor(std::vector<std::size_t> dims, std::vector<double> values);

  static Tensor zeros(std::initializer_list<std::size_t> dims);
  static Tensor zeros(const std::vector<std::size_t>& dims);
  static Tensor full(std::initializer_list<std::size_t> dims, double value);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  /// Leading dimension, or 0 for an empty tensor.
  std::size_t dim(std::size_t i) const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  /// True when every element is finite.
  bool all_finite() const;
};

/// Throws NumericError unless every element of t is finite.
void require_finite(const Tensor& t, const char* context);

/// Elementwise clamp of every value into [lo, hi]. Throws ConfigError
/// when lo > hi.
Tensor clip_values(const Tensor& t, double lo, double hi);

/// In-place variant of clip_values.
void clip_values_inplace(Tensor& t, double lo, double hi);

}  // namespace scengen::nn

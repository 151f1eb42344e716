#include "scengen/tensor.hpp"

#include <cmath>
#include <string>

#include "scengen/common.hpp"

namespace scengen::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

void check_dims(const std::vector<std::size_t>& dims, std::size_t size) {
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("Tensor: zero dimension");
  }
  if (product(dims) != size) {
    throw ShapeError("Tensor: shape product " + std::to_string(product(dims)) +
                     " does not match data size " + std::to_string(size));
  }
}

}  // namespace

Tensor::Tensor(std::initializer_list<std::size_t> dims, std::vector<double> values)
    : shape(dims), data(std::move(values)) {
  check_dims(shape, data.size());
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  check_dims(shape, data.size());
}

Tensor Tensor::zeros(std::initializer_list<std::size_t> dims) {
  return zeros(std::vector<std::size_t>(dims));
}

Tensor Tensor::zeros(const std::vector<std::size_t>& dims) {
  Tensor t;
  t.shape = dims;
  t.data.assign(product(dims), 0.0);
  check_dims(t.shape, t.data.size());
  return t;
}

Tensor Tensor::full(std::initializer_list<std::size_t> dims, double value) {
  Tensor t = zeros(dims);
  for (double& v : t.data) v = value;
  return t;
}

std::size_t Tensor::dim(std::size_t i) const {
  return i < shape.size() ? shape[i] : 0;
}

double& Tensor::at(std::size_t row, std::size_t col) {
  return data[row * shape.back() + col];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return data[row * shape.back() + col];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* context) {
  if (!t.all_finite()) {
    throw NumericError(std::string(context) + ": non-finite value");
  }
}

Tensor clip_values(const Tensor& t, double lo, double hi) {
  Tensor out = t;
  clip_values_inplace(out, lo, hi);
  return out;
}

void clip_values_inplace(Tensor& t, double lo, double hi) {
  if (lo > hi) throw ConfigError("clip_values: lo > hi");
  for (double& v : t.data) {
    if (v < lo) {
      v = lo;
    } else if (v > hi) {
      v = hi;
    }
  }
}

}  // namespace scengen::nn

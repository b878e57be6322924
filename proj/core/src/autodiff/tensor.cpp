#include "melada/autodiff/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "melada/error.hpp"

namespace melada::ad {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError(fmt::format("tensor of shape {} cannot hold {} values", shape_string(shape_),
                                 data_.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

void Tensor::throw_not_matrix() const {
  throw ShapeError(fmt::format("expected a matrix, got shape {}", shape_string(shape_)));
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError(fmt::format("item() needs a single element, shape is {}", shape_string(shape_)));
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  // v - v is NaN exactly for infinities and NaNs; the sum stays 0 otherwise.
  double acc = 0.0;
  for (double v : data_) acc += v - v;
  return acc == 0.0;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  return fmt::format("[{}]", fmt::join(shape, "x"));
}

}  // namespace melada::ad

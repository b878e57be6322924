#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace melada::ad {

/// Dense row-major tensor of 64-bit reals.
///
/// The tape only operates on rank-2 values (scalars are 1x1), but the type
/// itself carries an arbitrary shape so that batched sequence data can be
/// described without a separate container.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rows/cols of a rank-2 tensor. Throws ShapeError for other ranks.
  std::size_t rows() const {
    if (shape_.size() != 2) throw_not_matrix();
    return shape_[0];
  }
  std::size_t cols() const {
    if (shape_.size() != 2) throw_not_matrix();
    return shape_[1];
  }
  bool is_scalar() const noexcept { return shape_.size() == 2 && shape_[0] == 1 && shape_[1] == 1; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

  /// Value of a 1x1 tensor.
  double item() const;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  [[noreturn]] void throw_not_matrix() const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace melada::ad

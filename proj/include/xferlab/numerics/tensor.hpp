#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/util/error.hpp"

namespace xferlab::numerics {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

// Dense row-major double tensor. Rank 0 is a scalar, rank 1 a vector that
// matrix primitives treat as a single row.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_) {
      if (d == 0) throw DimensionError("zero-length dimension in " + shape_string(shape_));
    }
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) {
    auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  static Tensor vector(std::vector<double> values) {
    auto n = values.size();
    return Tensor({n}, std::move(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  static Tensor identity(std::size_t n) {
    auto t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  // Matrix view: rank 0 and 1 tensors are a single row.
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const {
    if (shape_.size() == 2) return shape_[1];
    return shape_.empty() ? 1 : shape_[0];
  }

  std::span<const double> data() const { return data_; }
  std::vector<double>& mutable_data() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const {
    if (data_.size() != 1) throw ContractError("item() on non-scalar tensor " + shape_string(shape_));
    return data_[0];
  }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

  const std::optional<std::vector<double>>& grad() const { return grad_; }

  // Adds into the gradient buffer, allocating it on first use.
  void accumulate_grad(std::span<const double> g) {
    if (g.size() != data_.size()) throw DimensionError("gradient length mismatch for " + shape_string(shape_));
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) (*grad_)[i] += g[i];
  }

  // Mutable gradient storage, zero-initialized on first access.
  std::vector<double>& grad_buffer() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    return *grad_;
  }

  void zero_grad() { grad_.reset(); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
  std::optional<std::vector<double>> grad_;
};

}  // namespace xferlab::numerics

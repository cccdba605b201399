#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "code2seq/random.hpp"

namespace code2seq {

using Shape = std::vector<std::size_t>;

/// Dense row-major array of doubles. Rank 1 is a vector, rank 2 a matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Shape& shape);

// Plain (non-recording) kernels. All throw `kShapeMismatch` on bad shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor concat(std::span<const Tensor> parts);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// axis 0 for vectors; axis 0 (columns) or 1 (rows) for matrices.
Tensor softmax(const Tensor& v, std::size_t axis = 0);

/// Largest double below 1; tanh results are clamped to stay strictly inside (-1, 1).
double bounded_tanh(double x);
double logistic(double x);

/// Uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)). For matrices fan_in is
/// the leading dimension and fan_out the trailing one; vectors use their size
/// for both.
Tensor glorot_uniform(const Shape& shape, Rng& rng);
double glorot_limit(const Shape& shape);

/// Inverted dropout mask: each entry is 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);
/// Applies dropout when training; identity otherwise.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training);

/// -ln p[index] for a probability vector.
double cross_entropy(const Tensor& distribution, std::size_t index);

}  // namespace code2seq

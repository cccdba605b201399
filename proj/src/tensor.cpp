#include "code2seq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "code2seq/error.hpp"

namespace code2seq {
namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorCode::kShapeMismatch, "tensor needs at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw Error(ErrorCode::kShapeMismatch, "tensor dimensions must be positive");
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + shape_string(a.shape()) +
                                             " vs " + shape_string(b.shape()));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != product(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "data length " + std::to_string(data_.size()) + " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape_[0] : 1; }
std::size_t Tensor::cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  // Vectors act as a single row on the left.
  if (a.rank() > 2 || b.rank() != 2 || a.cols() != b.rows()) mismatch("matmul", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Tensor out(a.rank() == 1 ? Shape{m} : Shape{n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.raw() + i * m;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a.raw()[i * inner + k];
      const double* src = b.raw() + k * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat of nothing");
  std::vector<double> data;
  for (const auto& p : parts) {
    if (p.rank() != 1) throw Error(ErrorCode::kShapeMismatch, "concat expects vectors");
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor::vector(std::move(data));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double bounded_tanh(double x) {
  static const double kMax = std::nextafter(1.0, 0.0);
  return std::clamp(std::tanh(x), -kMax, kMax);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor tanh(const Tensor& a) {
  Tensor out = a;
  for (auto& x : out.data()) x = bounded_tanh(x);
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = a;
  for (auto& x : out.data()) x = logistic(x);
  return out;
}

Tensor softmax(const Tensor& v, std::size_t axis) {
  if (v.rank() > 2 || axis >= v.rank()) {
    throw Error(ErrorCode::kShapeMismatch, "softmax axis out of range for " + shape_string(v.shape()));
  }
  Tensor out = v;
  const std::size_t rows = v.rows(), cols = v.cols();
  // Normalize each line along `axis`; a "line" is a row for axis = last.
  const bool along_rows = v.rank() == 1 || axis == 1;
  const std::size_t lines = along_rows ? rows : cols;
  const std::size_t len = along_rows ? cols : rows;
  for (std::size_t l = 0; l < lines; ++l) {
    auto idx = [&](std::size_t i) { return along_rows ? l * cols + i : i * cols + l; };
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, out[idx(i)]);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      out[idx(i)] = std::exp(out[idx(i)] - mx);
      sum += out[idx(i)];
    }
    for (std::size_t i = 0; i < len; ++i) out[idx(i)] /= sum;
  }
  return out;
}

double glorot_limit(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorCode::kShapeMismatch, "glorot init needs a shape");
  double fan_in, fan_out;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    fan_in = static_cast<double>(shape.front());
    fan_out = static_cast<double>(shape.back());
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor glorot_uniform(const Shape& shape, Rng& rng) {
  const double limit = glorot_limit(shape);
  Tensor out(shape);
  for (auto& x : out.data()) x = rng.uniform(-limit, limit);
  return out;
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error(ErrorCode::kInvalidArgument, "dropout rate must be in [0, 1)");
  Tensor mask(shape, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, bool training) {
  if (!training || rate == 0.0) return x;
  return mul(x, dropout_mask(x.shape(), rate, rng));
}

double cross_entropy(const Tensor& distribution, std::size_t index) {
  if (index >= distribution.size()) {
    throw Error(ErrorCode::kInvalidIndex, "target index " + std::to_string(index) + " outside distribution of size " +
                                              std::to_string(distribution.size()));
  }
  return -std::log(distribution[index]);
}

}  // namespace code2seq

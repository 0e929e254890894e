#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "uap/rng.hpp"

namespace uap {

/// Norm order used for budgets and projections.
enum class NormOrder : std::uint8_t { L2 = 2, Linf = 255 };

std::string to_string(NormOrder p);
/// Accepts "2", "l2", "inf", "linf".
NormOrder parse_norm_order(const std::string& text);

using Shape = std::vector<std::size_t>;

/// Dense row-major float32 array. Every public operation keeps the values
/// finite and data().size() == product(shape()).
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  /// 1-D tensor from literal values.
  static Tensor of(std::initializer_list<float> values);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  /// Row `i` of a 2-D tensor.
  std::span<const float> row(std::size_t i) const;
  std::span<float> row(std::size_t i);

  /// Same data under a different shape with equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// sqrt(sum x^2) for L2, max |x| for Linf. Accumulates in double.
/// Throws std::invalid_argument("empty tensor") for empty input.
double lp_norm(std::span<const float> values, NormOrder p);
double lp_norm(const Tensor& t, NormOrder p);

double dot(std::span<const float> a, std::span<const float> b);

/// alpha * x + y elementwise.
Tensor axpy(float alpha, const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& t, float factor);
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);

/// i.i.d. standard normal samples drawn from `rng`.
Tensor gaussian_tensor(const Shape& shape, Rng& rng);
/// i.i.d. uniform samples on [lo, hi).
Tensor uniform_tensor(const Shape& shape, float lo, float hi, Rng& rng);

}  // namespace uap

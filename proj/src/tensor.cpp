#include "uap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "uap/error.hpp"

namespace uap {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
}

Tensor checked(Tensor t, const char* op) {
  if (!t.all_finite()) {
    throw Error(std::string(op) + ": result contains non-finite values");
  }
  return t;
}

}  // namespace

std::string to_string(NormOrder p) { return p == NormOrder::L2 ? "2" : "inf"; }

NormOrder parse_norm_order(const std::string& text) {
  if (text == "2" || text == "l2" || text == "L2") return NormOrder::L2;
  if (text == "inf" || text == "linf" || text == "Linf") return NormOrder::Linf;
  throw std::invalid_argument("unknown norm order '" + text +
                              "' (expected 2 or inf)");
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (auto dim : shape_) {
    if (dim == 0) throw std::invalid_argument("tensor dimensions must be positive");
  }
  data_.assign(shape_size(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto dim : shape_) {
    if (dim == 0) throw std::invalid_argument("tensor dimensions must be positive");
  }
  if (data_.size() != shape_size(shape_)) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " +
                                shape_to_string(shape_));
  }
  if (!all_finite()) throw std::invalid_argument("tensor data must be finite");
}

Tensor Tensor::of(std::initializer_list<float> values) {
  return Tensor(Shape{values.size()}, std::vector<float>(values));
}

Tensor Tensor::filled(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::span<const float> Tensor::row(std::size_t i) const {
  if (shape_.size() != 2) throw std::invalid_argument("row() requires a 2-D tensor");
  return std::span<const float>(data_).subspan(i * shape_[1], shape_[1]);
}

std::span<float> Tensor::row(std::size_t i) {
  if (shape_.size() != 2) throw std::invalid_argument("row() requires a 2-D tensor");
  return std::span<float>(data_).subspan(i * shape_[1], shape_[1]);
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](float x) { return std::isfinite(x); });
}

double lp_norm(std::span<const float> values, NormOrder p) {
  if (values.empty()) throw std::invalid_argument("empty tensor");
  if (p == NormOrder::Linf) {
    double m = 0.0;
    for (float x : values) m = std::max(m, std::abs(static_cast<double>(x)));
    return m;
  }
  double sum = 0.0;
  for (float x : values) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

double lp_norm(const Tensor& t, NormOrder p) { return lp_norm(t.data(), p); }

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

Tensor axpy(float alpha, const Tensor& x, const Tensor& y) {
  require_same_shape(x, y, "axpy");
  Tensor out = y;
  auto o = out.data();
  auto xs = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * xs[i] + o[i];
  return checked(std::move(out), "axpy");
}

Tensor scale(const Tensor& t, float factor) {
  Tensor out = t;
  for (float& v : out.data()) v *= factor;
  return checked(std::move(out), "scale");
}

Tensor add(const Tensor& a, const Tensor& b) { return axpy(1.0f, a, b); }

Tensor subtract(const Tensor& a, const Tensor& b) { return axpy(-1.0f, b, a); }

Tensor gaussian_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

Tensor uniform_tensor(const Shape& shape, float lo, float hi, Rng& rng) {
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace uap

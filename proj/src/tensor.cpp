#include "ucad/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace ucad {

int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("tensor: negative extent");
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  const int64_t n = shape_product(shape);
  return Tensor(std::move(shape),
                std::make_shared<const std::vector<double>>(n, 0.0));
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("tensor: non-finite fill value");
  const int64_t n = shape_product(shape);
  return Tensor(std::move(shape),
                std::make_shared<const std::vector<double>>(n, value));
}

Tensor Tensor::from_data_unchecked(std::vector<int64_t> shape,
                                   std::vector<double> data) {
  if (shape_product(shape) != static_cast<int64_t>(data.size())) {
    throw std::invalid_argument("tensor: shape/data size mismatch");
  }
  return Tensor(std::move(shape),
                std::make_shared<const std::vector<double>>(std::move(data)));
}

Tensor Tensor::from_data(std::vector<int64_t> shape, std::vector<double> data) {
  Tensor t = from_data_unchecked(std::move(shape), std::move(data));
  if (!t.all_finite()) throw std::invalid_argument("tensor: non-finite value");
  return t;
}

const std::vector<double>& Tensor::data() const {
  static const std::vector<double> kEmpty;
  return data_ ? *data_ : kEmpty;
}

int64_t Tensor::rows() const {
  if (shape_.size() != 2) throw std::logic_error("tensor: rows() on non-matrix " + shape_str());
  return shape_[0];
}

int64_t Tensor::cols() const {
  if (shape_.size() != 2) throw std::logic_error("tensor: cols() on non-matrix " + shape_str());
  return shape_[1];
}

bool Tensor::all_finite() const {
  for (double v : data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::equals(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  const auto& a = data();
  const auto& b = other.data();
  for (size_t i = 0; i < a.size(); ++i) {
    // Bitwise compare so that -0.0 vs 0.0 and NaN patterns are not conflated.
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

}  // namespace ucad

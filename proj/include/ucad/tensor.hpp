#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ucad {

/// Dense row-major tensor of 64-bit floats. Immutable after construction;
/// copies share the underlying buffer, so Tensor is cheap to pass by value
/// and safe to share across threads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double value);
  /// Validates product(shape) == data.size() and that every value is finite.
  static Tensor from_data(std::vector<int64_t> shape, std::vector<double> data);
  /// Same as from_data but skips the finite check; callers that produce
  /// intermediate values run their own check with an op name attached.
  static Tensor from_data_unchecked(std::vector<int64_t> shape,
                                    std::vector<double> data);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data().size()); }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  /// Row/column extents of a 2-D tensor; throws otherwise.
  int64_t rows() const;
  int64_t cols() const;

  bool empty() const { return !data_ || data_->empty(); }
  const std::vector<double>& data() const;
  const double* ptr() const { return data().data(); }

  double at(int64_t i) const { return data()[i]; }
  double at(int64_t r, int64_t c) const { return data()[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  /// Bitwise equality of shape and contents.
  bool equals(const Tensor& other) const;

  std::string shape_str() const;

 private:
  Tensor(std::vector<int64_t> shape, std::shared_ptr<const std::vector<double>> data)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  std::vector<int64_t> shape_;
  std::shared_ptr<const std::vector<double>> data_;
};

int64_t shape_product(const std::vector<int64_t>& shape);

}  // namespace ucad

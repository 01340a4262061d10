#include "vagan/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "vagan/error.hpp"

namespace vagan {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) {
    throw Error(ErrorKind::dimension, "tensor shape must have at least one axis");
  }
  std::size_t n = 1;
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    if (shape[axis] == 0) {
      throw Error(ErrorKind::dimension, "axis " + std::to_string(axis) + " of shape " +
                                            shape_string(shape) + " is zero");
    }
    n *= shape[axis];
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorKind::dimension, "tensor of shape " + shape_string(shape_) + " given " +
                                          std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error(ErrorKind::dimension, "axis " + std::to_string(axis) + " out of range for shape " +
                                          shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorKind::dimension,
                "item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw Error(ErrorKind::dimension, "cannot reshape " + shape_string(shape_) + " to " +
                                          shape_string(shape));
  }
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace vagan

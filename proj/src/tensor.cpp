#include "roast/tensor.hpp"

#include "roast/error.hpp"

#include <sstream>

namespace roast {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ValidationError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape_size(shape_)));
}

Tensor::Tensor(Shape shape, Eigen::VectorXd data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (static_cast<std::size_t>(data_.size()) != shape_size(shape_)) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.data_.setConstant(value);
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ValidationError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

Eigen::Map<RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) {
  if (rows * cols != size()) throw ValidationError("matrix view does not cover tensor " + shape_string(shape_));
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) throw ValidationError("matrix view does not cover tensor " + shape_string(shape_));
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ValidationError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace roast

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace roast {

using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. An empty shape is a scalar.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Eigen::VectorXd data);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor(Shape{}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t last_dim() const { return shape_.empty() ? 1 : shape_.back(); }
  // Product of all dimensions except the last.
  std::size_t leading_size() const { return size() / last_dim(); }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }
  double& operator[](std::size_t i) { return data_[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return data_[static_cast<Eigen::Index>(i)]; }
  double item() const;

  // Row-major 2-D view; rows * cols must equal size().
  Eigen::Map<RowMatrix> matrix(std::size_t rows, std::size_t cols);
  Eigen::Map<const RowMatrix> matrix(std::size_t rows, std::size_t cols) const;
  // View as [leading_size() x last_dim()].
  Eigen::Map<RowMatrix> rows() { return matrix(leading_size(), last_dim()); }
  Eigen::Map<const RowMatrix> rows() const { return matrix(leading_size(), last_dim()); }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

}  // namespace roast

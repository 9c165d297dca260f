#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "mscnn/errors.hpp"

namespace mscnn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

std::string shape_string(const Shape& shape);

/// Product of extents; throws ShapeError for empty shapes, rank > 4 or
/// non-positive extents.
Index checked_volume(const Shape& shape);

/// Dense row-major array of up to four axes (conventionally B x C x H x W).
/// Storage is an Eigen column vector so the whole buffer, or any contiguous
/// block of it, can be viewed as an Eigen expression without copying.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Vector<Scalar>;

  Tensor() = default;

  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)), data_(Storage::Constant(checked_volume(shape_), fill)) {}

  Tensor(Shape shape, std::initializer_list<Scalar> values) : Tensor(std::move(shape)) {
    if (static_cast<Index>(values.size()) != data_.size())
      throw ShapeError("initializer has " + std::to_string(values.size()) + " values for shape " +
                       shape_string(shape_));
    Index i = 0;
    for (Scalar v : values) data_[i++] = v;
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Storage& values() { return data_; }
  const Storage& values() const { return data_; }

  Eigen::Map<RowMatrix<Scalar>> matrix(Index rows, Index cols, Index offset = 0) {
    check_block(rows * cols, offset);
    return {data_.data() + offset, rows, cols};
  }
  Eigen::Map<const RowMatrix<Scalar>> matrix(Index rows, Index cols, Index offset = 0) const {
    check_block(rows * cols, offset);
    return {data_.data() + offset, rows, cols};
  }

  /// Row-major offset of a full index tuple.
  template <typename... I>
  Index offset(I... idx) const {
    if (static_cast<Index>(sizeof...(I)) != rank())
      throw ShapeError("index arity " + std::to_string(sizeof...(I)) + " does not match rank " +
                       std::to_string(rank()));
    const Index indices[] = {static_cast<Index>(idx)...};
    Index off = 0;
    for (std::size_t a = 0; a < sizeof...(I); ++a) {
      if (indices[a] < 0 || indices[a] >= shape_[a])
        throw ShapeError("index out of range for shape " + shape_string(shape_));
      off = off * shape_[a] + indices[a];
    }
    return off;
  }

  template <typename... I>
  Scalar& operator()(I... idx) {
    return data_[offset(idx...)];
  }
  template <typename... I>
  Scalar operator()(I... idx) const {
    return data_[offset(idx...)];
  }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// Reinterpret with a new shape of equal volume.
  void reshape(Shape shape) {
    if (checked_volume(shape) != data_.size())
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
  }

  Tensor reshaped(Shape shape) const {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }

  template <typename To>
  Tensor<To> cast() const {
    Tensor<To> out(shape_);
    out.values() = data_.template cast<To>();
    return out;
  }

  void set_zero() { data_.setZero(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_block(Index count, Index offset) const {
    if (offset < 0 || count < 0 || offset + count > data_.size())
      throw ShapeError("block view exceeds tensor of shape " + shape_string(shape_));
  }

  Shape shape_;
  Storage data_;
};

enum class ElementwiseOp { add, sub, mul };
enum class ReduceOp { sum, mean, max };

template <typename Scalar>
Tensor<Scalar> elementwise(const Tensor<Scalar>& a, const Tensor<Scalar>& b, ElementwiseOp op) {
  if (a.shape() != b.shape())
    throw ShapeError("elementwise shape mismatch: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  Tensor<Scalar> out(a.shape());
  switch (op) {
    case ElementwiseOp::add: out.values() = a.values() + b.values(); break;
    case ElementwiseOp::sub: out.values() = a.values() - b.values(); break;
    case ElementwiseOp::mul: out.values() = a.values().cwiseProduct(b.values()); break;
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::add);
}
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::sub);
}
template <typename Scalar>
Tensor<Scalar> hadamard(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::mul);
}

template <typename Scalar>
Scalar reduce(const Tensor<Scalar>& a, ReduceOp op) {
  if (a.empty()) throw ShapeError("reduction of an empty tensor");
  switch (op) {
    case ReduceOp::sum: return a.values().sum();
    case ReduceOp::mean: return a.values().sum() / static_cast<Scalar>(a.size());
    case ReduceOp::max: return a.values().maxCoeff();
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar sum(const Tensor<Scalar>& a) {
  return reduce(a, ReduceOp::sum);
}
template <typename Scalar>
Scalar mean(const Tensor<Scalar>& a) {
  return reduce(a, ReduceOp::mean);
}
template <typename Scalar>
Scalar max(const Tensor<Scalar>& a) {
  return reduce(a, ReduceOp::max);
}

}  // namespace mscnn

#include "mscnn/tensor.hpp"

namespace mscnn {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Index checked_volume(const Shape& shape) {
  if (shape.empty() || shape.size() > 4)
    throw ShapeError("tensor rank must be 1..4, got shape " + shape_string(shape));
  Index volume = 1;
  for (Index e : shape) {
    if (e < 1) throw ShapeError("non-positive extent in shape " + shape_string(shape));
    volume *= e;
  }
  return volume;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mscnn

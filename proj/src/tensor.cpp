#include "msinet/tensor.hpp"

#include <cmath>

namespace msinet {

std::size_t Shape::operator[](std::size_t axis) const {
  switch (axis) {
    case 0: return n;
    case 1: return c;
    case 2: return h;
    case 3: return w;
    default: throw std::out_of_range("shape axis " + std::to_string(axis));
  }
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  static constexpr const char* kAxis[] = {"batch", "channel", "height", "width"};
  for (std::size_t axis = 0; axis < 4; ++axis) {
    if (a[axis] != b[axis]) {
      throw ShapeError(std::string(what) + ": " + kAxis[axis] + " dimension mismatch (" +
                       std::to_string(a[axis]) + " vs " + std::to_string(b[axis]) + ")");
    }
  }
}

template <class T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace msinet

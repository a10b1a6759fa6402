#pragma once

#include "msinet/tensor.hpp"

namespace msinet {

template <class T>
struct Spectrum {
  BasicTensor<T> real;
  BasicTensor<T> imag;
};

/// Unnormalized 2-D DFT over (h, w) of every (n, c) plane:
/// X[u, v] = sum_{h, w} x[h, w] * exp(-2*pi*i*(u*h/H + v*w/W)).
template <class T>
Spectrum<T> dft2(const BasicTensor<T>& x);

/// Vector-Jacobian product of dft2: given cotangents of the real and imaginary
/// outputs, returns the cotangent of the (real) input.
template <class T>
BasicTensor<T> dft2_backward(const BasicTensor<T>& grad_real, const BasicTensor<T>& grad_imag);

}  // namespace msinet

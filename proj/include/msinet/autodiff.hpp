#pragma once

// Differentiable wrappers: each records the forward kernel from ops.hpp / dft.hpp
// together with its vector-Jacobian product.

#include <array>
#include <cstddef>

#include "msinet/ops.hpp"
#include "msinet/tape.hpp"

namespace msinet::ad {

template <class T>
Var<T> conv2d(Var<T> x, const ops::ConvSpec& spec, Var<T> weight, Var<T> bias);
template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> shift, double eps);
template <class T>
Var<T> simple_gate(Var<T> x);
template <class T>
Var<T> global_avg_pool(Var<T> x);
template <class T>
Var<T> pixel_shuffle(Var<T> x, std::size_t r);
template <class T>
Var<T> batched_matmul(Var<T> a, Var<T> b, bool transpose_a = false, bool transpose_b = false);
template <class T>
Var<T> permute(Var<T> x, std::array<std::size_t, 4> axes);
template <class T>
Var<T> scale_channels(Var<T> x, Var<T> s);

template <class T>
Var<T> add(Var<T> a, Var<T> b);
template <class T>
Var<T> sub(Var<T> a, Var<T> b);
template <class T>
Var<T> mul(Var<T> a, Var<T> b);
template <class T>
Var<T> scale(Var<T> x, T s);
template <class T>
Var<T> square(Var<T> x);
/// |x| with d|x|/dx = sign(x) and sign(0) = 0.
template <class T>
Var<T> abs(Var<T> x);
/// Scalar (1, 1, 1, 1) sum of all elements.
template <class T>
Var<T> sum(Var<T> x);
template <class T>
Var<T> mean(Var<T> x);

template <class T>
struct SpectrumVars {
  Var<T> real;
  Var<T> imag;
};

template <class T>
SpectrumVars<T> dft2(Var<T> x);

}  // namespace msinet::ad

#pragma once

// Forward kernels and their vector-Jacobian products. Every function is pure;
// accumulation order inside each output value is fixed.

#include <array>
#include <cstddef>

#include "msinet/tensor.hpp"

namespace msinet::ops {

/// Stride-1 convolution with "same" zero padding.
struct ConvSpec {
  std::size_t out_ch = 1;
  std::size_t in_ch = 1;
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t groups = 1;
  std::size_t dil_h = 1;
  std::size_t dil_w = 1;

  std::size_t pad_h() const { return (kh - 1) * dil_h / 2; }
  std::size_t pad_w() const { return (kw - 1) * dil_w / 2; }
  std::size_t fan_in() const { return (in_ch / groups) * kh * kw; }
  Shape weight_shape() const { return {out_ch, in_ch / groups, kh, kw}; }

  /// Throws std::invalid_argument on zero sizes, even kernels, indivisible groups.
  void validate() const;

  static ConvSpec dense(std::size_t in, std::size_t out, std::size_t k);
  static ConvSpec depthwise(std::size_t channels, std::size_t kh, std::size_t kw, std::size_t dil_h = 1,
                            std::size_t dil_w = 1);
};

template <class T>
struct ConvGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const ConvSpec& spec, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias);
template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const ConvSpec& spec, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out);

/// Normalizes the channel vector at every (n, h, w) site.
template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain, const BasicTensor<T>& shift,
                          double eps);

template <class T>
struct LayerNormGrads {
  BasicTensor<T> input;
  BasicTensor<T> gain;
  BasicTensor<T> shift;
};

template <class T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gain, double eps,
                                      const BasicTensor<T>& grad_out);

/// out[k] = x[k] * x[k + c/2].
template <class T>
BasicTensor<T> simple_gate(const BasicTensor<T>& x);
template <class T>
BasicTensor<T> simple_gate_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

template <class T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);
template <class T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out);

/// out[c, h*r + i, w*r + j] = in[c*r*r + i*r + j, h, w].
template <class T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& x, std::size_t r);
template <class T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& x, std::size_t r);

/// Per (n, c) matrix product: (P x K) * (K x Q). Optional transposes read the
/// stored matrix as its transpose.
template <class T>
BasicTensor<T> batched_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b, bool transpose_a = false,
                              bool transpose_b = false);

/// out.shape[i] = x.shape[axes[i]].
template <class T>
BasicTensor<T> permute(const BasicTensor<T>& x, std::array<std::size_t, 4> axes);
std::array<std::size_t, 4> inverse_permutation(std::array<std::size_t, 4> axes);

/// x * s with s of shape (1 or n, c, 1, 1) broadcast over (h, w).
template <class T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& s);
/// Gradient w.r.t. s, reduced to s's shape.
template <class T>
BasicTensor<T> scale_channels_backward_scale(const BasicTensor<T>& x, const Shape& s_shape,
                                             const BasicTensor<T>& grad_out);

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s);

}  // namespace msinet::ops

#include "msinet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace msinet::ops {
namespace {

using Index = std::ptrdiff_t;

std::string dim_mismatch(const char* op, const char* dim, std::size_t got, std::size_t want) {
  return std::string(op) + ": " + dim + " dimension mismatch (got " + std::to_string(got) + ", expected " +
         std::to_string(want) + ")";
}

// out[y, x] += s * in[y + oy, x + ox] wherever the source lies inside the plane.
template <class T>
void axpy_shifted(T* out, const T* in, T s, Index h, Index w, Index oy, Index ox) {
  const Index y0 = std::max<Index>(0, -oy);
  const Index y1 = std::min<Index>(h, h - oy);
  const Index x0 = std::max<Index>(0, -ox);
  const Index x1 = std::min<Index>(w, w - ox);
  for (Index y = y0; y < y1; ++y) {
    T* o = out + y * w;
    const T* i = in + (y + oy) * w + ox;
    for (Index x = x0; x < x1; ++x) o[x] += s * i[x];
  }
}

// sum over valid (y, x) of a[y, x] * b[y + oy, x + ox].
template <class T>
T dot_shifted(const T* a, const T* b, Index h, Index w, Index oy, Index ox) {
  const Index y0 = std::max<Index>(0, -oy);
  const Index y1 = std::min<Index>(h, h - oy);
  const Index x0 = std::max<Index>(0, -ox);
  const Index x1 = std::min<Index>(w, w - ox);
  T acc = 0;
  for (Index y = y0; y < y1; ++y) {
    const T* pa = a + y * w;
    const T* pb = b + (y + oy) * w + ox;
    for (Index x = x0; x < x1; ++x) acc += pa[x] * pb[x];
  }
  return acc;
}

void check_channel_param(const char* op, std::size_t numel, std::size_t channels) {
  if (numel != channels) throw ShapeError(dim_mismatch(op, "channel", numel, channels));
}

}  // namespace

void ConvSpec::validate() const {
  if (out_ch == 0 || in_ch == 0 || kh == 0 || kw == 0 || groups == 0) {
    throw std::invalid_argument("conv spec: sizes must be positive");
  }
  if (dil_h == 0 || dil_w == 0) throw std::invalid_argument("conv spec: dilation must be >= 1");
  if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("conv spec: kernel extent must be odd");
  if (in_ch % groups != 0) throw std::invalid_argument("conv spec: in_ch not divisible by groups");
  if (out_ch % groups != 0) throw std::invalid_argument("conv spec: out_ch not divisible by groups");
}

ConvSpec ConvSpec::dense(std::size_t in, std::size_t out, std::size_t k) {
  return ConvSpec{out, in, k, k, 1, 1, 1};
}

ConvSpec ConvSpec::depthwise(std::size_t channels, std::size_t kh, std::size_t kw, std::size_t dil_h,
                             std::size_t dil_w) {
  return ConvSpec{channels, channels, kh, kw, channels, dil_h, dil_w};
}

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const ConvSpec& spec, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  spec.validate();
  const Shape& s = x.shape();
  if (s.c != spec.in_ch) throw ShapeError(dim_mismatch("conv2d input", "channel", s.c, spec.in_ch));
  const Shape ws = spec.weight_shape();
  if (weight.shape() != ws) {
    require_same_shape(weight.shape(), ws, "conv2d weight");
  }
  check_channel_param("conv2d bias", bias.numel(), spec.out_ch);

  const Index h = static_cast<Index>(s.h);
  const Index w = static_cast<Index>(s.w);
  const std::size_t in_per_group = spec.in_ch / spec.groups;
  const std::size_t out_per_group = spec.out_ch / spec.groups;
  BasicTensor<T> out(Shape{s.n, spec.out_ch, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t oc = 0; oc < spec.out_ch; ++oc) {
      T* o = out.plane(n, oc);
      std::fill(o, o + s.plane(), bias[oc]);
      const std::size_t g = oc / out_per_group;
      for (std::size_t icg = 0; icg < in_per_group; ++icg) {
        const T* in = x.plane(n, g * in_per_group + icg);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          const Index oy = static_cast<Index>(ky * spec.dil_h) - static_cast<Index>(spec.pad_h());
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            const Index ox = static_cast<Index>(kx * spec.dil_w) - static_cast<Index>(spec.pad_w());
            const T wv = weight.at(oc, icg, ky, kx);
            if (wv != T(0)) axpy_shifted(o, in, wv, h, w, oy, ox);
          }
        }
      }
    }
  }
  return out;
}

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x, const ConvSpec& spec, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out) {
  const Shape& s = x.shape();
  require_same_shape(grad_out.shape(), Shape{s.n, spec.out_ch, s.h, s.w}, "conv2d gradient");
  const Index h = static_cast<Index>(s.h);
  const Index w = static_cast<Index>(s.w);
  const std::size_t in_per_group = spec.in_ch / spec.groups;
  const std::size_t out_per_group = spec.out_ch / spec.groups;

  ConvGrads<T> g{BasicTensor<T>(s), BasicTensor<T>(spec.weight_shape()), BasicTensor<T>(Shape{1, spec.out_ch, 1, 1})};

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t ic = 0; ic < spec.in_ch; ++ic) {
      T* dx = g.input.plane(n, ic);
      const std::size_t grp = ic / in_per_group;
      const std::size_t icg = ic % in_per_group;
      for (std::size_t ocg = 0; ocg < out_per_group; ++ocg) {
        const std::size_t oc = grp * out_per_group + ocg;
        const T* dy = grad_out.plane(n, oc);
        for (std::size_t ky = 0; ky < spec.kh; ++ky) {
          const Index oy = static_cast<Index>(ky * spec.dil_h) - static_cast<Index>(spec.pad_h());
          for (std::size_t kx = 0; kx < spec.kw; ++kx) {
            const Index ox = static_cast<Index>(kx * spec.dil_w) - static_cast<Index>(spec.pad_w());
            const T wv = weight.at(oc, icg, ky, kx);
            if (wv != T(0)) axpy_shifted(dx, dy, wv, h, w, -oy, -ox);
          }
        }
      }
    }
  }

  for (std::size_t oc = 0; oc < spec.out_ch; ++oc) {
    const std::size_t grp = oc / out_per_group;
    for (std::size_t icg = 0; icg < in_per_group; ++icg) {
      const std::size_t ic = grp * in_per_group + icg;
      for (std::size_t ky = 0; ky < spec.kh; ++ky) {
        const Index oy = static_cast<Index>(ky * spec.dil_h) - static_cast<Index>(spec.pad_h());
        for (std::size_t kx = 0; kx < spec.kw; ++kx) {
          const Index ox = static_cast<Index>(kx * spec.dil_w) - static_cast<Index>(spec.pad_w());
          T acc = 0;
          for (std::size_t n = 0; n < s.n; ++n) acc += dot_shifted(grad_out.plane(n, oc), x.plane(n, ic), h, w, oy, ox);
          g.weight.at(oc, icg, ky, kx) = acc;
        }
      }
    }
    T acc = 0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* dy = grad_out.plane(n, oc);
      for (std::size_t p = 0; p < s.plane(); ++p) acc += dy[p];
    }
    g.bias[oc] = acc;
  }
  return g;
}

template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain, const BasicTensor<T>& shift,
                          double eps) {
  const Shape& s = x.shape();
  check_channel_param("layer_norm gain", gain.numel(), s.c);
  check_channel_param("layer_norm shift", shift.numel(), s.c);
  BasicTensor<T> out(s);
  const std::size_t plane = s.plane();
  std::vector<T> mean(plane), var(plane);
  const T inv_c = T(1) / static_cast<T>(s.c);
  for (std::size_t n = 0; n < s.n; ++n) {
    std::fill(mean.begin(), mean.end(), T(0));
    std::fill(var.begin(), var.end(), T(0));
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      for (std::size_t p = 0; p < plane; ++p) mean[p] += in[p];
    }
    for (auto& m : mean) m *= inv_c;
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      for (std::size_t p = 0; p < plane; ++p) {
        const T d = in[p] - mean[p];
        var[p] += d * d;
      }
    }
    for (auto& v : var) v = T(1) / std::sqrt(v * inv_c + static_cast<T>(eps));
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      T* o = out.plane(n, c);
      const T g = gain[c];
      const T b = shift[c];
      for (std::size_t p = 0; p < plane; ++p) o[p] = g * ((in[p] - mean[p]) * var[p]) + b;
    }
  }
  return out;
}

template <class T>
LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gain, double eps,
                                      const BasicTensor<T>& grad_out) {
  const Shape& s = x.shape();
  require_same_shape(grad_out.shape(), s, "layer_norm gradient");
  LayerNormGrads<T> g{BasicTensor<T>(s), BasicTensor<T>(Shape{1, s.c, 1, 1}), BasicTensor<T>(Shape{1, s.c, 1, 1})};
  const std::size_t plane = s.plane();
  const T inv_c = T(1) / static_cast<T>(s.c);
  std::vector<T> mean(plane), rstd(plane), m1(plane), m2(plane);
  std::vector<T> xhat(s.c * plane);
  for (std::size_t n = 0; n < s.n; ++n) {
    std::fill(mean.begin(), mean.end(), T(0));
    std::fill(rstd.begin(), rstd.end(), T(0));
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      for (std::size_t p = 0; p < plane; ++p) mean[p] += in[p];
    }
    for (auto& m : mean) m *= inv_c;
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      for (std::size_t p = 0; p < plane; ++p) {
        const T d = in[p] - mean[p];
        rstd[p] += d * d;
      }
    }
    for (auto& v : rstd) v = T(1) / std::sqrt(v * inv_c + static_cast<T>(eps));

    std::fill(m1.begin(), m1.end(), T(0));
    std::fill(m2.begin(), m2.end(), T(0));
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      const T* dy = grad_out.plane(n, c);
      T* xh = xhat.data() + c * plane;
      const T gc = gain[c];
      T dgain = 0;
      T dshift = 0;
      for (std::size_t p = 0; p < plane; ++p) {
        xh[p] = (in[p] - mean[p]) * rstd[p];
        const T dxh = dy[p] * gc;
        m1[p] += dxh;
        m2[p] += dxh * xh[p];
        dgain += dy[p] * xh[p];
        dshift += dy[p];
      }
      g.gain[c] += dgain;
      g.shift[c] += dshift;
    }
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* dy = grad_out.plane(n, c);
      const T* xh = xhat.data() + c * plane;
      T* dx = g.input.plane(n, c);
      const T gc = gain[c];
      for (std::size_t p = 0; p < plane; ++p) {
        dx[p] = rstd[p] * (dy[p] * gc - m1[p] * inv_c - xh[p] * m2[p] * inv_c);
      }
    }
  }
  return g;
}

template <class T>
BasicTensor<T> simple_gate(const BasicTensor<T>& x) {
  const Shape& s = x.shape();
  if (s.c % 2 != 0) throw ShapeError("simple_gate: channel dimension must be even (got " + std::to_string(s.c) + ")");
  const std::size_t half = s.c / 2;
  BasicTensor<T> out(Shape{s.n, half, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < half; ++c) {
      const T* a = x.plane(n, c);
      const T* b = x.plane(n, c + half);
      T* o = out.plane(n, c);
      for (std::size_t p = 0; p < s.plane(); ++p) o[p] = a[p] * b[p];
    }
  }
  return out;
}

template <class T>
BasicTensor<T> simple_gate_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  const Shape& s = x.shape();
  const std::size_t half = s.c / 2;
  require_same_shape(grad_out.shape(), Shape{s.n, half, s.h, s.w}, "simple_gate gradient");
  BasicTensor<T> dx(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < half; ++c) {
      const T* a = x.plane(n, c);
      const T* b = x.plane(n, c + half);
      const T* dy = grad_out.plane(n, c);
      T* da = dx.plane(n, c);
      T* db = dx.plane(n, c + half);
      for (std::size_t p = 0; p < s.plane(); ++p) {
        da[p] = dy[p] * b[p];
        db[p] = dy[p] * a[p];
      }
    }
  }
  return dx;
}

template <class T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  const Shape& s = x.shape();
  BasicTensor<T> out(Shape{s.n, s.c, 1, 1});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      T acc = 0;
      for (std::size_t p = 0; p < s.plane(); ++p) acc += in[p];
      out.at(n, c, 0, 0) = acc / static_cast<T>(s.plane());
    }
  }
  return out;
}

template <class T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out) {
  const Shape& s = input_shape;
  require_same_shape(grad_out.shape(), Shape{s.n, s.c, 1, 1}, "global_avg_pool gradient");
  BasicTensor<T> dx(s);
  const T inv = T(1) / static_cast<T>(s.plane());
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      T* d = dx.plane(n, c);
      std::fill(d, d + s.plane(), grad_out.at(n, c, 0, 0) * inv);
    }
  }
  return dx;
}

template <class T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& x, std::size_t r) {
  const Shape& s = x.shape();
  if (r == 0) throw std::invalid_argument("pixel_shuffle: upscale factor must be positive");
  if (s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: channel dimension " + std::to_string(s.c) + " not divisible by r^2 = " +
                     std::to_string(r * r));
  }
  const std::size_t oc = s.c / (r * r);
  BasicTensor<T> out(Shape{s.n, oc, s.h * r, s.w * r});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < oc; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          const T* in = x.plane(n, c * r * r + i * r + j);
          for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t xx = 0; xx < s.w; ++xx) out.at(n, c, y * r + i, xx * r + j) = in[y * s.w + xx];
        }
  return out;
}

template <class T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& x, std::size_t r) {
  const Shape& s = x.shape();
  if (r == 0 || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial size " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " not divisible by r = " + std::to_string(r));
  }
  const std::size_t h = s.h / r;
  const std::size_t w = s.w / r;
  BasicTensor<T> out(Shape{s.n, s.c * r * r, h, w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          T* o = out.plane(n, c * r * r + i * r + j);
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx) o[y * w + xx] = x.at(n, c, y * r + i, xx * r + j);
        }
  return out;
}

template <class T>
BasicTensor<T> batched_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b, bool transpose_a,
                              bool transpose_b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n) throw ShapeError(dim_mismatch("batched_matmul", "batch", sb.n, sa.n));
  if (sa.c != sb.c) throw ShapeError(dim_mismatch("batched_matmul", "channel", sb.c, sa.c));
  const std::size_t p_dim = transpose_a ? sa.w : sa.h;
  const std::size_t k_dim = transpose_a ? sa.h : sa.w;
  const std::size_t kb = transpose_b ? sb.w : sb.h;
  const std::size_t q_dim = transpose_b ? sb.h : sb.w;
  if (k_dim != kb) throw ShapeError(dim_mismatch("batched_matmul", "inner", kb, k_dim));

  // Strides of the logical (row, col) index into the stored matrix.
  const std::size_t a_rs = transpose_a ? 1 : sa.w;
  const std::size_t a_cs = transpose_a ? sa.w : 1;
  const std::size_t b_rs = transpose_b ? 1 : sb.w;
  const std::size_t b_cs = transpose_b ? sb.w : 1;

  BasicTensor<T> out(Shape{sa.n, sa.c, p_dim, q_dim});
  for (std::size_t n = 0; n < sa.n; ++n) {
    for (std::size_t c = 0; c < sa.c; ++c) {
      const T* pa = a.plane(n, c);
      const T* pb = b.plane(n, c);
      T* po = out.plane(n, c);
      for (std::size_t i = 0; i < p_dim; ++i) {
        T* row = po + i * q_dim;
        for (std::size_t k = 0; k < k_dim; ++k) {
          const T av = pa[i * a_rs + k * a_cs];
          const T* brow = pb + k * b_rs;
          if (b_cs == 1) {
            for (std::size_t j = 0; j < q_dim; ++j) row[j] += av * brow[j];
          } else {
            for (std::size_t j = 0; j < q_dim; ++j) row[j] += av * brow[j * b_cs];
          }
        }
      }
    }
  }
  return out;
}

std::array<std::size_t, 4> inverse_permutation(std::array<std::size_t, 4> axes) {
  std::array<std::size_t, 4> inv{};
  for (std::size_t i = 0; i < 4; ++i) inv[axes[i]] = i;
  return inv;
}

template <class T>
BasicTensor<T> permute(const BasicTensor<T>& x, std::array<std::size_t, 4> axes) {
  std::array<bool, 4> seen{};
  for (auto a : axes) {
    if (a > 3 || seen[a]) throw std::invalid_argument("permute: axes must be a permutation of 0..3");
    seen[a] = true;
  }
  const Shape& s = x.shape();
  const std::array<std::size_t, 4> in_dims{s.n, s.c, s.h, s.w};
  const std::array<std::size_t, 4> in_strides{s.c * s.h * s.w, s.h * s.w, s.w, 1};
  const Shape os{in_dims[axes[0]], in_dims[axes[1]], in_dims[axes[2]], in_dims[axes[3]]};
  std::array<std::size_t, 4> st{};
  for (std::size_t i = 0; i < 4; ++i) st[i] = in_strides[axes[i]];
  BasicTensor<T> out(os);
  std::size_t idx = 0;
  for (std::size_t i0 = 0; i0 < os.n; ++i0)
    for (std::size_t i1 = 0; i1 < os.c; ++i1)
      for (std::size_t i2 = 0; i2 < os.h; ++i2) {
        const T* base = x.raw() + i0 * st[0] + i1 * st[1] + i2 * st[2];
        for (std::size_t i3 = 0; i3 < os.w; ++i3) out[idx++] = base[i3 * st[3]];
      }
  return out;
}

namespace {
void check_scale_shape(const Shape& x, const Shape& s) {
  if (s.h != 1 || s.w != 1) throw ShapeError("scale_channels: scale must have spatial size 1x1, got " + s.str());
  if (s.c != x.c) throw ShapeError(dim_mismatch("scale_channels", "channel", s.c, x.c));
  if (s.n != 1 && s.n != x.n) throw ShapeError(dim_mismatch("scale_channels", "batch", s.n, x.n));
}
}  // namespace

template <class T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& s) {
  const Shape& xs = x.shape();
  check_scale_shape(xs, s.shape());
  BasicTensor<T> out(xs);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t c = 0; c < xs.c; ++c) {
      const T sv = s.at(s.shape().n == 1 ? 0 : n, c, 0, 0);
      const T* in = x.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t p = 0; p < xs.plane(); ++p) o[p] = in[p] * sv;
    }
  return out;
}

template <class T>
BasicTensor<T> scale_channels_backward_scale(const BasicTensor<T>& x, const Shape& s_shape,
                                             const BasicTensor<T>& grad_out) {
  const Shape& xs = x.shape();
  check_scale_shape(xs, s_shape);
  BasicTensor<T> ds(s_shape);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t c = 0; c < xs.c; ++c) {
      const T* in = x.plane(n, c);
      const T* dy = grad_out.plane(n, c);
      T acc = 0;
      for (std::size_t p = 0; p < xs.plane(); ++p) acc += dy[p] * in[p];
      ds.at(s_shape.n == 1 ? 0 : n, c, 0, 0) += acc;
    }
  return ds;
}

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s) {
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
  return out;
}

#define MSINET_INSTANTIATE_OPS(T)                                                                              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const ConvSpec&, const BasicTensor<T>&,               \
                                 const BasicTensor<T>&);                                                      \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const ConvSpec&, const BasicTensor<T>&,        \
                                        const BasicTensor<T>&);                                               \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,     \
                                     double);                                                                 \
  template LayerNormGrads<T> layer_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&, double,        \
                                                 const BasicTensor<T>&);                                      \
  template BasicTensor<T> simple_gate(const BasicTensor<T>&);                                                 \
  template BasicTensor<T> simple_gate_backward(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                             \
  template BasicTensor<T> global_avg_pool_backward(const Shape&, const BasicTensor<T>&);                      \
  template BasicTensor<T> pixel_shuffle(const BasicTensor<T>&, std::size_t);                                  \
  template BasicTensor<T> pixel_unshuffle(const BasicTensor<T>&, std::size_t);                                \
  template BasicTensor<T> batched_matmul(const BasicTensor<T>&, const BasicTensor<T>&, bool, bool);           \
  template BasicTensor<T> permute(const BasicTensor<T>&, std::array<std::size_t, 4>);                         \
  template BasicTensor<T> scale_channels(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template BasicTensor<T> scale_channels_backward_scale(const BasicTensor<T>&, const Shape&,                  \
                                                        const BasicTensor<T>&);                               \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);

MSINET_INSTANTIATE_OPS(float)
MSINET_INSTANTIATE_OPS(double)

#undef MSINET_INSTANTIATE_OPS

}  // namespace msinet::ops

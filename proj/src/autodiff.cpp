#include "msinet/autodiff.hpp"

#include "msinet/dft.hpp"

namespace msinet::ad {

template <class T>
Var<T> conv2d(Var<T> x, const ops::ConvSpec& spec, Var<T> weight, Var<T> bias) {
  auto out = ops::conv2d(x.value(), spec, weight.value(), bias.value());
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record("conv2d", std::move(out), {x, weight, bias},
                         [xi, wi, bi, spec](GradTape<T>& t, const BasicTensor<T>& g) {
                           auto grads = ops::conv2d_backward(t.value(xi), spec, t.value(wi), g);
                           t.accumulate(xi, std::move(grads.input));
                           t.accumulate(wi, std::move(grads.weight));
                           t.accumulate(bi, grads.bias.reshaped(t.value(bi).shape()));
                         });
}

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> shift, double eps) {
  auto out = ops::layer_norm(x.value(), gain.value(), shift.value(), eps);
  const std::size_t xi = x.id(), gi = gain.id(), si = shift.id();
  return x.tape().record("layer_norm", std::move(out), {x, gain, shift},
                         [xi, gi, si, eps](GradTape<T>& t, const BasicTensor<T>& g) {
                           auto grads = ops::layer_norm_backward(t.value(xi), t.value(gi), eps, g);
                           t.accumulate(xi, std::move(grads.input));
                           t.accumulate(gi, grads.gain.reshaped(t.value(gi).shape()));
                           t.accumulate(si, grads.shift.reshaped(t.value(si).shape()));
                         });
}

template <class T>
Var<T> simple_gate(Var<T> x) {
  const std::size_t xi = x.id();
  return x.tape().record("simple_gate", ops::simple_gate(x.value()), {x},
                         [xi](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, ops::simple_gate_backward(t.value(xi), g));
                         });
}

template <class T>
Var<T> global_avg_pool(Var<T> x) {
  const std::size_t xi = x.id();
  return x.tape().record("global_avg_pool", ops::global_avg_pool(x.value()), {x},
                         [xi](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, ops::global_avg_pool_backward(t.value(xi).shape(), g));
                         });
}

template <class T>
Var<T> pixel_shuffle(Var<T> x, std::size_t r) {
  const std::size_t xi = x.id();
  return x.tape().record("pixel_shuffle", ops::pixel_shuffle(x.value(), r), {x},
                         [xi, r](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, ops::pixel_unshuffle(g, r));
                         });
}

// C = op(A) op(B); dA and dB are again batched products with transposes.
template <class T>
Var<T> batched_matmul(Var<T> a, Var<T> b, bool ta, bool tb) {
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record(
      "batched_matmul", ops::batched_matmul(a.value(), b.value(), ta, tb), {a, b},
      [ai, bi, ta, tb](GradTape<T>& t, const BasicTensor<T>& g) {
        const auto& av = t.value(ai);
        const auto& bv = t.value(bi);
        if (t.requires_grad(ai)) {
          // dop(A) = G op(B)^T; if A is stored transposed, dA = (G op(B)^T)^T = op(B) G^T.
          t.accumulate(ai, ta ? ops::batched_matmul(bv, g, tb, true) : ops::batched_matmul(g, bv, false, !tb));
        }
        if (t.requires_grad(bi)) {
          // dop(B) = op(A)^T G; if B is stored transposed, dB = G^T op(A).
          t.accumulate(bi, tb ? ops::batched_matmul(g, av, true, ta) : ops::batched_matmul(av, g, !ta, false));
        }
      });
}

template <class T>
Var<T> permute(Var<T> x, std::array<std::size_t, 4> axes) {
  const std::size_t xi = x.id();
  return x.tape().record("permute", ops::permute(x.value(), axes), {x},
                         [xi, axes](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, ops::permute(g, ops::inverse_permutation(axes)));
                         });
}

template <class T>
Var<T> scale_channels(Var<T> x, Var<T> s) {
  const std::size_t xi = x.id(), si = s.id();
  return x.tape().record("scale_channels", ops::scale_channels(x.value(), s.value()), {x, s},
                         [xi, si](GradTape<T>& t, const BasicTensor<T>& g) {
                           if (t.requires_grad(xi)) t.accumulate(xi, ops::scale_channels(g, t.value(si)));
                           if (t.requires_grad(si)) {
                             t.accumulate(si, ops::scale_channels_backward_scale(t.value(xi), t.value(si).shape(), g));
                           }
                         });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("add", ops::add(a.value(), b.value()), {a, b},
                         [ai, bi](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(ai, g);
                           t.accumulate(bi, g);
                         });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("sub", ops::sub(a.value(), b.value()), {a, b},
                         [ai, bi](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(ai, g);
                           if (t.requires_grad(bi)) t.accumulate(bi, ops::scale(g, T(-1)));
                         });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape().record("mul", ops::mul(a.value(), b.value()), {a, b},
                         [ai, bi](GradTape<T>& t, const BasicTensor<T>& g) {
                           if (t.requires_grad(ai)) t.accumulate(ai, ops::mul(g, t.value(bi)));
                           if (t.requires_grad(bi)) t.accumulate(bi, ops::mul(g, t.value(ai)));
                         });
}

template <class T>
Var<T> scale(Var<T> x, T s) {
  const std::size_t xi = x.id();
  return x.tape().record("scale", ops::scale(x.value(), s), {x},
                         [xi, s](GradTape<T>& t, const BasicTensor<T>& g) { t.accumulate(xi, ops::scale(g, s)); });
}

template <class T>
Var<T> square(Var<T> x) {
  const std::size_t xi = x.id();
  return x.tape().record("square", ops::mul(x.value(), x.value()), {x},
                         [xi](GradTape<T>& t, const BasicTensor<T>& g) {
                           const auto& xv = t.value(xi);
                           BasicTensor<T> d(xv.shape());
                           for (std::size_t i = 0; i < d.numel(); ++i) d[i] = T(2) * xv[i] * g[i];
                           t.accumulate(xi, std::move(d));
                         });
}

template <class T>
Var<T> abs(Var<T> x) {
  const auto& xv = x.value();
  BasicTensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = xv[i] < T(0) ? -xv[i] : xv[i];
  const std::size_t xi = x.id();
  return x.tape().record("abs", std::move(out), {x}, [xi](GradTape<T>& t, const BasicTensor<T>& g) {
    const auto& v = t.value(xi);
    BasicTensor<T> d(v.shape());
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] = v[i] > T(0) ? g[i] : (v[i] < T(0) ? -g[i] : T(0));
    t.accumulate(xi, std::move(d));
  });
}

template <class T>
Var<T> sum(Var<T> x) {
  T acc = 0;
  for (T v : x.value().data()) acc += v;
  const std::size_t xi = x.id();
  return x.tape().record("sum", BasicTensor<T>(Shape{1, 1, 1, 1}, acc), {x},
                         [xi](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, BasicTensor<T>(t.value(xi).shape(), g[0]));
                         });
}

template <class T>
Var<T> mean(Var<T> x) {
  T acc = 0;
  for (T v : x.value().data()) acc += v;
  const T n = static_cast<T>(x.value().numel());
  const std::size_t xi = x.id();
  return x.tape().record("mean", BasicTensor<T>(Shape{1, 1, 1, 1}, acc / n), {x},
                         [xi, n](GradTape<T>& t, const BasicTensor<T>& g) {
                           t.accumulate(xi, BasicTensor<T>(t.value(xi).shape(), g[0] / n));
                         });
}

// The two outputs share one input; each output node carries its half of the
// product Re(DFT(gr - i*gi)) by passing a zero for the other part.
template <class T>
SpectrumVars<T> dft2(Var<T> x) {
  auto spec = msinet::dft2(x.value());
  const std::size_t xi = x.id();
  auto re = x.tape().record("dft2", std::move(spec.real), {x}, [xi](GradTape<T>& t, const BasicTensor<T>& g) {
    t.accumulate(xi, msinet::dft2_backward(g, BasicTensor<T>(g.shape())));
  });
  auto im = x.tape().record("dft2", std::move(spec.imag), {x}, [xi](GradTape<T>& t, const BasicTensor<T>& g) {
    t.accumulate(xi, msinet::dft2_backward(BasicTensor<T>(g.shape()), g));
  });
  return {re, im};
}

#define MSINET_INSTANTIATE_AD(T)                                                          \
  template Var<T> conv2d(Var<T>, const ops::ConvSpec&, Var<T>, Var<T>);                   \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, double);                             \
  template Var<T> simple_gate(Var<T>);                                                    \
  template Var<T> global_avg_pool(Var<T>);                                                \
  template Var<T> pixel_shuffle(Var<T>, std::size_t);                                     \
  template Var<T> batched_matmul(Var<T>, Var<T>, bool, bool);                             \
  template Var<T> permute(Var<T>, std::array<std::size_t, 4>);                            \
  template Var<T> scale_channels(Var<T>, Var<T>);                                         \
  template Var<T> add(Var<T>, Var<T>);                                                    \
  template Var<T> sub(Var<T>, Var<T>);                                                    \
  template Var<T> mul(Var<T>, Var<T>);                                                    \
  template Var<T> scale(Var<T>, T);                                                       \
  template Var<T> square(Var<T>);                                                         \
  template Var<T> abs(Var<T>);                                                            \
  template Var<T> sum(Var<T>);                                                            \
  template Var<T> mean(Var<T>);                                                           \
  template SpectrumVars<T> dft2(Var<T>);

MSINET_INSTANTIATE_AD(float)
MSINET_INSTANTIATE_AD(double)

#undef MSINET_INSTANTIATE_AD

}  // namespace msinet::ad

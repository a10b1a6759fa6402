#include "msinet/ot_attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace msinet::ot {
namespace {

constexpr std::array<std::size_t, 4> kToRows{0, 2, 3, 1};    // (n, C, H, W) -> (n, H, W, C)
constexpr std::array<std::size_t, 4> kFromRows{0, 3, 1, 2};  // (n, H, W, C) -> (n, C, H, W)

void check_square(const Shape& s) {
  if (s.h != s.w) {
    throw ShapeError("sinkhorn: cost slices must be square (height " + std::to_string(s.h) + " vs width " +
                     std::to_string(s.w) + ")");
  }
}

// Per-iteration softmax matrices kept for the reverse sweep.
template <class T>
struct SliceTrace {
  std::vector<T> col_soft;  // iters x W x W, softmax over i for each column j (v-update)
  std::vector<T> row_soft;  // iters x W x W, softmax over j for each row i (u-update)
};

// One W x W slice. Writes the scaled plan to `plan`; fills `trace` when given.
template <class T>
void sinkhorn_slice(const T* m, std::size_t w, std::size_t iters, T* plan, SliceTrace<T>* trace) {
  const T log_marginal = -std::log(static_cast<T>(w));
  const T log_w = std::log(static_cast<T>(w));
  std::vector<T> u(w, T(0)), v(w, T(0)), mx(w), acc(w), e(w * w);
  if (trace) {
    trace->col_soft.assign(iters * w * w, T(0));
    trace->row_soft.assign(iters * w * w, T(0));
  }
  for (std::size_t t = 0; t < iters; ++t) {
    // v_j = log b - LSE_i(M_ij + u_i)
    std::fill(mx.begin(), mx.end(), -std::numeric_limits<T>::infinity());
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) mx[j] = std::max(mx[j], m[i * w + j] + u[i]);
    std::fill(acc.begin(), acc.end(), T(0));
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T ev = std::exp(m[i * w + j] + u[i] - mx[j]);
        e[i * w + j] = ev;
        acc[j] += ev;
      }
    for (std::size_t j = 0; j < w; ++j) v[j] = log_marginal - (mx[j] + std::log(acc[j]));
    if (trace) {
      T* q = trace->col_soft.data() + t * w * w;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) q[i * w + j] = e[i * w + j] / acc[j];
    }

    // u_i = log a - LSE_j(M_ij + v_j)
    for (std::size_t i = 0; i < w; ++i) {
      const T* row = m + i * w;
      T rmax = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < w; ++j) rmax = std::max(rmax, row[j] + v[j]);
      T s = 0;
      T* er = e.data() + i * w;
      for (std::size_t j = 0; j < w; ++j) {
        er[j] = std::exp(row[j] + v[j] - rmax);
        s += er[j];
      }
      u[i] = log_marginal - (rmax + std::log(s));
      if (trace) {
        T* p = trace->row_soft.data() + t * w * w + i * w;
        for (std::size_t j = 0; j < w; ++j) p[j] = er[j] / s;
      }
    }
  }
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j) plan[i * w + j] = std::exp(m[i * w + j] + u[i] + v[j] + log_w);
}

// Reverse sweep through the unrolled iterations of one slice.
template <class T>
void sinkhorn_slice_backward(const T* plan, const T* grad_plan, std::size_t w, std::size_t iters,
                             const SliceTrace<T>& trace, T* grad_m) {
  std::vector<T> gu(w, T(0)), gv(w, T(0));
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const T gl = grad_plan[i * w + j] * plan[i * w + j];
      grad_m[i * w + j] = gl;
      gu[i] += gl;
      gv[j] += gl;
    }
  for (std::size_t t = iters; t-- > 0;) {
    const T* p = trace.row_soft.data() + t * w * w;
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T d = gu[i] * p[i * w + j];
        grad_m[i * w + j] -= d;
        gv[j] -= d;
      }
    const T* q = trace.col_soft.data() + t * w * w;
    std::fill(gu.begin(), gu.end(), T(0));
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T d = gv[j] * q[i * w + j];
        grad_m[i * w + j] -= d;
        gu[i] -= d;
      }
    std::fill(gv.begin(), gv.end(), T(0));
  }
}

template <class T>
ad::Var<T> conv(ad::Var<T> x, const blocks::ConvParams<T>& c) {
  const std::size_t ch = x.shape().c;
  return ad::conv2d(x, ops::ConvSpec::dense(ch, ch, 1), c.weight, c.bias);
}

}  // namespace

template <class T>
BasicTensor<T> cost_matrix(const BasicTensor<T>& u_l, const BasicTensor<T>& u_r) {
  require_same_shape(u_r.shape(), u_l.shape(), "cost_matrix");
  auto m = ops::batched_matmul(ops::permute(u_l, kToRows), ops::permute(u_r, kToRows), false, true);
  return ops::scale(m, T(1) / std::sqrt(static_cast<T>(u_l.shape().c)));
}

template <class T>
BasicTensor<T> sinkhorn(const BasicTensor<T>& m, const SinkhornConfig& cfg) {
  if (cfg.iters < 1) throw std::invalid_argument("sinkhorn: iters must be >= 1");
  const Shape& s = m.shape();
  check_square(s);
  BasicTensor<T> plan(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t r = 0; r < s.c; ++r) sinkhorn_slice(m.plane(n, r), s.w, cfg.iters, plan.plane(n, r), static_cast<SliceTrace<T>*>(nullptr));
  return plan;
}

template <class T>
MarginalViolation marginal_violation(const BasicTensor<T>& plan) {
  const Shape& s = plan.shape();
  check_square(s);
  MarginalViolation out;
  const std::size_t w = s.w;
  std::vector<double> col(w);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t r = 0; r < s.c; ++r) {
      const T* p = plan.plane(n, r);
      std::fill(col.begin(), col.end(), 0.0);
      for (std::size_t i = 0; i < w; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
          row += p[i * w + j];
          col[j] += p[i * w + j];
        }
        out.max_row = std::max(out.max_row, std::abs(row - 1.0));
      }
      for (double c : col) out.max_col = std::max(out.max_col, std::abs(c - 1.0));
    }
  return out;
}

template <class T>
ad::Var<T> cost_matrix(ad::Var<T> u_l, ad::Var<T> u_r) {
  require_same_shape(u_r.shape(), u_l.shape(), "cost_matrix");
  auto m = ad::batched_matmul(ad::permute(u_l, kToRows), ad::permute(u_r, kToRows), false, true);
  return ad::scale(m, T(1) / std::sqrt(static_cast<T>(u_l.shape().c)));
}

template <class T>
ad::Var<T> sinkhorn(ad::Var<T> m, const SinkhornConfig& cfg) {
  if (cfg.iters < 1) throw std::invalid_argument("sinkhorn: iters must be >= 1");
  const Shape s = m.shape();
  check_square(s);
  auto& tape = m.tape();
  const bool tracing = tape.requires_grad(m.id());
  auto traces = std::make_shared<std::vector<SliceTrace<T>>>(tracing ? s.n * s.c : 0);
  BasicTensor<T> plan(s);
  const auto& mv = m.value();
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t r = 0; r < s.c; ++r) {
      sinkhorn_slice(mv.plane(n, r), s.w, cfg.iters, plan.plane(n, r),
                     tracing ? &(*traces)[n * s.c + r] : nullptr);
    }
  const std::size_t mi = m.id();
  const std::size_t pi = tape.size();  // id the plan node is about to receive
  const std::size_t iters = cfg.iters;
  return tape.record("sinkhorn", std::move(plan), {m},
                     [mi, pi, iters, traces, s](ad::GradTape<T>& t, const BasicTensor<T>& g) {
                       BasicTensor<T> gm(s);
                       const auto& pv = t.value(pi);
                       for (std::size_t n = 0; n < s.n; ++n)
                         for (std::size_t r = 0; r < s.c; ++r) {
                           sinkhorn_slice_backward(pv.plane(n, r), g.plane(n, r), s.w, iters,
                                                   (*traces)[n * s.c + r], gm.plane(n, r));
                         }
                       t.accumulate(mi, std::move(gm));
                     });
}

void append_deam_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c) {
  for (const char* view : {"l", "r"}) {
    out.push_back({prefix + ".norm_" + view + ".gain", Shape{1, c, 1, 1}, ParamInit::kOne, 1});
    out.push_back({prefix + ".norm_" + view + ".shift", Shape{1, c, 1, 1}, ParamInit::kZero, 1});
  }
  const auto spec = ops::ConvSpec::dense(c, c, 1);
  for (const char* proj : {"u_l", "u_r", "v_l", "v_r"}) {
    out.push_back({prefix + "." + proj + ".weight", spec.weight_shape(), ParamInit::kUniformFanIn, spec.fan_in()});
    out.push_back({prefix + "." + proj + ".bias", Shape{1, c, 1, 1}, ParamInit::kZero, 1});
  }
  out.push_back({prefix + ".gamma_l", Shape{1, c, 1, 1}, ParamInit::kZero, 1});
  out.push_back({prefix + ".gamma_r", Shape{1, c, 1, 1}, ParamInit::kZero, 1});
}

template <class T>
DeamParams<T> bind_deam(const ParamBinding<T>& p, const std::string& prefix) {
  auto conv_params = [&](const char* name) {
    return blocks::ConvParams<T>{p[prefix + "." + name + ".weight"], p[prefix + "." + name + ".bias"]};
  };
  DeamParams<T> out;
  out.norm_l_gain = p[prefix + ".norm_l.gain"];
  out.norm_l_shift = p[prefix + ".norm_l.shift"];
  out.norm_r_gain = p[prefix + ".norm_r.gain"];
  out.norm_r_shift = p[prefix + ".norm_r.shift"];
  out.u_l = conv_params("u_l");
  out.u_r = conv_params("u_r");
  out.v_l = conv_params("v_l");
  out.v_r = conv_params("v_r");
  out.gamma_l = p[prefix + ".gamma_l"];
  out.gamma_r = p[prefix + ".gamma_r"];
  return out;
}

template <class T>
FusedViews<T> fuse_views(ad::Var<T> x_l, ad::Var<T> x_r, ad::Var<T> v_l, ad::Var<T> v_r, ad::Var<T> plan,
                         ad::Var<T> gamma_l, ad::Var<T> gamma_r) {
  require_same_shape(x_r.shape(), x_l.shape(), "fuse_views");
  auto r_to_l = ad::permute(ad::batched_matmul(plan, ad::permute(v_r, kToRows), false, false), kFromRows);
  auto l_to_r = ad::permute(ad::batched_matmul(plan, ad::permute(v_l, kToRows), true, false), kFromRows);
  return {ad::add(ad::scale_channels(r_to_l, gamma_l), x_l), ad::add(ad::scale_channels(l_to_r, gamma_r), x_r)};
}

template <class T>
DeamOutput<T> deam_forward(ad::Var<T> x_l, ad::Var<T> x_r, const DeamParams<T>& p, const SinkhornConfig& cfg) {
  require_same_shape(x_r.shape(), x_l.shape(), "deam_forward");
  auto u_l = conv(ad::layer_norm(x_l, p.norm_l_gain, p.norm_l_shift, kLayerNormEps), p.u_l);
  auto u_r = conv(ad::layer_norm(x_r, p.norm_r_gain, p.norm_r_shift, kLayerNormEps), p.u_r);
  auto v_l = conv(x_l, p.v_l);
  auto v_r = conv(x_r, p.v_r);
  auto plan = sinkhorn(cost_matrix(u_l, u_r), cfg);
  auto fused = fuse_views(x_l, x_r, v_l, v_r, plan, p.gamma_l, p.gamma_r);
  return {fused.left, fused.right, plan};
}

#define MSINET_INSTANTIATE_OT(T)                                                                             \
  template BasicTensor<T> cost_matrix(const BasicTensor<T>&, const BasicTensor<T>&);                         \
  template BasicTensor<T> sinkhorn(const BasicTensor<T>&, const SinkhornConfig&);                            \
  template MarginalViolation marginal_violation(const BasicTensor<T>&);                                      \
  template ad::Var<T> cost_matrix(ad::Var<T>, ad::Var<T>);                                                   \
  template ad::Var<T> sinkhorn(ad::Var<T>, const SinkhornConfig&);                                           \
  template DeamParams<T> bind_deam(const ParamBinding<T>&, const std::string&);                              \
  template FusedViews<T> fuse_views(ad::Var<T>, ad::Var<T>, ad::Var<T>, ad::Var<T>, ad::Var<T>, ad::Var<T>, \
                                    ad::Var<T>);                                                             \
  template DeamOutput<T> deam_forward(ad::Var<T>, ad::Var<T>, const DeamParams<T>&, const SinkhornConfig&);

MSINET_INSTANTIATE_OT(float)
MSINET_INSTANTIATE_OT(double)

#undef MSINET_INSTANTIATE_OT

}  // namespace msinet::ot

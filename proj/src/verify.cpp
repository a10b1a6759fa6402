#include "msinet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msinet/autodiff.hpp"
#include "msinet/config.hpp"
#include "msinet/network.hpp"
#include "msinet/rng.hpp"
#include "msinet/training.hpp"

namespace msinet::verify {
namespace {

using V = ad::Var<double>;
using D = BasicTensor<double>;
using Tape = ad::GradTape<double>;
using Params = std::span<const V>;

// Random linear functional of a non-scalar output.
V project(Tape& tape, V out, Rng& rng) {
  return ad::sum(ad::mul(out, tape.constant(rng.uniform_tensor<double>(out.shape(), -1.0, 1.0))));
}

class Suite {
 public:
  Suite(std::uint64_t seed, const std::function<void(const GradCheckCase&)>& on_case)
      : rng_(seed), on_case_(on_case) {}

  D normal(Shape s, double sd = 1.0) { return rng_.normal_tensor<double>(s, sd); }
  D uniform(Shape s, double lo, double hi) { return rng_.uniform_tensor<double>(s, lo, hi); }

  // `body` maps the parameter Vars to an output; the loss is a fixed random projection of it.
  void run(std::string name, std::vector<D> params, const std::function<V(Tape&, Params)>& body,
           double tolerance = kPrimitiveTolerance) {
    const std::uint64_t proj_seed = rng_.next();
    LossBuilder loss = [&](Tape& tape, Params p) {
      Rng proj(proj_seed);
      return project(tape, body(tape, p), proj);
    };
    finish(std::move(name), grad_check(loss, params), tolerance);
  }

  void run_scalar(std::string name, std::vector<D> params, const LossBuilder& loss,
                  double tolerance = kPrimitiveTolerance) {
    finish(std::move(name), grad_check(loss, params), tolerance);
  }

  std::vector<GradCheckCase> take() { return std::move(cases_); }
  Rng& rng() { return rng_; }

 private:
  void finish(std::string name, GradCheckReport report, double tolerance) {
    cases_.push_back({std::move(name), report, tolerance});
    if (on_case_) on_case_(cases_.back());
  }

  Rng rng_;
  const std::function<void(const GradCheckCase&)>& on_case_;
  std::vector<GradCheckCase> cases_;
};

void primitives(Suite& s) {
  const Shape x4{2, 4, 5, 6};
  {
    const auto spec = ops::ConvSpec::dense(4, 3, 3);
    s.run("conv2d", {s.normal(x4), s.normal(spec.weight_shape(), 0.3), s.normal({1, 3, 1, 1})},
          [spec](Tape&, Params p) { return ad::conv2d(p[0], spec, p[1], p[2]); });
  }
  {
    const auto spec = ops::ConvSpec::depthwise(4, 1, 3, 1, 2);
    s.run("conv2d_depthwise_dilated", {s.normal(x4), s.normal(spec.weight_shape(), 0.3), s.normal({1, 4, 1, 1})},
          [spec](Tape&, Params p) { return ad::conv2d(p[0], spec, p[1], p[2]); });
  }
  s.run("layer_norm", {s.normal(x4), s.normal({1, 4, 1, 1}), s.normal({1, 4, 1, 1})},
        [](Tape&, Params p) { return ad::layer_norm(p[0], p[1], p[2], kLayerNormEps); });
  s.run("simple_gate", {s.normal(x4)}, [](Tape&, Params p) { return ad::simple_gate(p[0]); });
  s.run("global_avg_pool", {s.normal(x4)}, [](Tape&, Params p) { return ad::global_avg_pool(p[0]); });
  s.run("pixel_shuffle", {s.normal({1, 8, 3, 4})}, [](Tape&, Params p) { return ad::pixel_shuffle(p[0], 2); });
  for (int mode = 0; mode < 4; ++mode) {
    const bool ta = mode & 1, tb = mode & 2;
    const Shape a = ta ? Shape{2, 3, 4, 5} : Shape{2, 3, 5, 4};
    const Shape b = tb ? Shape{2, 3, 6, 4} : Shape{2, 3, 4, 6};
    s.run(std::string("batched_matmul") + (ta ? "_ta" : "") + (tb ? "_tb" : ""), {s.normal(a), s.normal(b)},
          [ta, tb](Tape&, Params p) { return ad::batched_matmul(p[0], p[1], ta, tb); });
  }
  s.run("permute", {s.normal(x4)}, [](Tape&, Params p) { return ad::permute(p[0], {0, 2, 3, 1}); });
  s.run("scale_channels", {s.normal(x4), s.normal({2, 4, 1, 1})},
        [](Tape&, Params p) { return ad::scale_channels(p[0], p[1]); });
  s.run("add", {s.normal(x4), s.normal(x4)}, [](Tape&, Params p) { return ad::add(p[0], p[1]); });
  s.run("sub", {s.normal(x4), s.normal(x4)}, [](Tape&, Params p) { return ad::sub(p[0], p[1]); });
  s.run("mul", {s.normal(x4), s.normal(x4)}, [](Tape&, Params p) { return ad::mul(p[0], p[1]); });
  s.run("scale", {s.normal(x4)}, [](Tape&, Params p) { return ad::scale(p[0], 0.75); });
  s.run("square", {s.normal(x4)}, [](Tape&, Params p) { return ad::square(p[0]); });
  {
    // keep samples away from the kink at zero
    D x = s.uniform(x4, 0.1, 1.0);
    for (std::size_t i = 0; i < x.numel(); i += 2) x[i] = -x[i];
    s.run("abs", {x}, [](Tape&, Params p) { return ad::abs(p[0]); });
  }
  s.run_scalar("sum", {s.normal(x4)}, [](Tape&, Params p) { return ad::sum(p[0]); });
  s.run_scalar("mean", {s.normal(x4)}, [](Tape&, Params p) { return ad::mean(p[0]); });
  s.run("dft2", {s.normal({1, 2, 6, 5})}, [](Tape&, Params p) {
    const auto f = ad::dft2(p[0]);
    return ad::add(f.real, ad::scale(f.imag, 0.5));
  });
  s.run("cost_matrix", {s.normal({2, 3, 2, 5}), s.normal({2, 3, 2, 5})},
        [](Tape&, Params p) { return ot::cost_matrix(p[0], p[1]); });
  s.run("sinkhorn", {s.normal({2, 3, 5, 5})},
        [](Tape&, Params p) { return ot::sinkhorn(p[0], ot::SinkhornConfig{}); });
}

// Binds a spec list to the checker's parameter Vars by name.
ParamBinding<double> bind_specs(const std::vector<ParamSpec>& specs, Params p) {
  std::vector<std::string> names;
  for (const auto& sp : specs) names.push_back(sp.name);
  return ParamBinding<double>(names, p);
}

std::vector<D> random_params(Suite& s, const std::vector<ParamSpec>& specs) {
  std::vector<D> out;
  for (const auto& sp : specs) {
    const double sd = sp.init == ParamInit::kUniformFanIn ? 1.0 / std::sqrt(static_cast<double>(sp.fan_in)) : 0.5;
    D t = s.normal(sp.shape, sd);
    if (sp.init == ParamInit::kOne)
      for (auto& v : t.data()) v += 1.0;
    out.push_back(std::move(t));
  }
  return out;
}

void blocks_suite(Suite& s) {
  const std::size_t c = 4;
  const Shape xs{1, c, 6, 7};
  std::vector<ParamSpec> specs;
  blocks::append_mscab_specs(specs, "b", c, default_lska_branches());
  const std::size_t n = specs.size();

  auto with_input = [&](const std::vector<ParamSpec>& sp) {
    auto params = random_params(s, sp);
    params.push_back(s.normal(xs));
    return params;
  };
  const auto branches = default_lska_branches();

  s.run("sca", {s.normal(xs), s.normal({c, c, 1, 1}, 0.5), s.normal({1, c, 1, 1})}, [](Tape&, Params p) {
    return blocks::sca(p[0], blocks::ConvParams<double>{p[1], p[2]});
  });
  s.run("mscam", with_input(specs), [&specs, n, c, branches](Tape&, Params p) {
    const auto bp = blocks::bind_mscab(bind_specs(specs, p.first(n)), "b", c, branches);
    return blocks::mscam(p[n], bp);
  });
  s.run("sffn", with_input(specs), [&specs, n, c, branches](Tape&, Params p) {
    const auto bp = blocks::bind_mscab(bind_specs(specs, p.first(n)), "b", c, branches);
    return blocks::sffn(p[n], bp);
  });

  std::vector<ParamSpec> dspecs;
  ot::append_deam_specs(dspecs, "d", c);
  const std::size_t dn = dspecs.size();
  auto dparams = random_params(s, dspecs);
  dparams.push_back(s.normal(xs));
  dparams.push_back(s.normal(xs));
  s.run("deam", dparams, [&dspecs, dn](Tape&, Params p) {
    const auto dp = ot::bind_deam(bind_specs(dspecs, p.first(dn)), "d");
    const auto out = ot::deam_forward(p[dn], p[dn + 1], dp, ot::SinkhornConfig{});
    return ad::add(out.f_l, ad::scale(out.f_r, 0.5));
  });
}

void end_to_end(Suite& s) {
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.width = 8;
  const auto specs = model_param_specs(cfg);
  const WeightStore init = init_model(cfg, s.rng().next());
  std::vector<D> params;
  for (const auto& e : init.entries()) {
    D t = e.value.cast<double>();
    // nonzero fusion scales so the cross-view path contributes to every gradient
    if (e.name.find("gamma") != std::string::npos) t = s.uniform(t.shape(), 0.2, 0.6);
    params.push_back(std::move(t));
  }
  const Shape lr{1, 3, 8, 16};
  const Shape hr{1, 3, 32, 64};
  const BasicStereoPair<double> lr_pair{s.uniform(lr, 0.0, 1.0), s.uniform(lr, 0.0, 1.0)};
  const BasicStereoPair<double> hr_pair{s.uniform(hr, 0.0, 1.0), s.uniform(hr, 0.0, 1.0)};
  s.run_scalar(
      "end_to_end",
      params,
      [&](Tape& tape, Params p) {
        const auto sr = forward(bind_specs(specs, p), cfg, StereoVars<double>{tape.constant(lr_pair.left), tape.constant(lr_pair.right)});
        return train::loss_total(sr, hr_pair, train::LossConfig{});
      },
      kEndToEndTolerance);
}

}  // namespace

std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed, const std::function<void(const GradCheckCase&)>& on_case) {
  Suite s(seed, on_case);
  primitives(s);
  blocks_suite(s);
  end_to_end(s);
  return s.take();
}

OracleResult sinkhorn_oracle(const BasicTensor<double>& m, double tol, std::size_t max_iters) {
  const Shape& s = m.shape();
  if (s.h != s.w) throw ShapeError("sinkhorn_oracle: slices must be square, got " + s.str());
  const std::size_t w = s.w;
  OracleResult res;
  res.plan = BasicTensor<double>(s);
  res.converged = true;
  std::vector<double> k(w * w), r(w), c(w);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t h = 0; h < s.c; ++h) {
      const double* src = m.plane(n, h);
      const double top = *std::max_element(src, src + w * w);
      for (std::size_t i = 0; i < w * w; ++i) k[i] = std::exp(src[i] - top);
      std::fill(r.begin(), r.end(), 1.0);
      std::size_t it = 0;
      bool done = false;
      while (it < max_iters && !done) {
        for (std::size_t j = 0; j < w; ++j) {
          double col = 0.0;
          for (std::size_t i = 0; i < w; ++i) col += k[i * w + j] * r[i];
          c[j] = 1.0 / col;
        }
        for (std::size_t i = 0; i < w; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < w; ++j) row += k[i * w + j] * c[j];
          r[i] = 1.0 / row;
        }
        ++it;
        double worst = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
          double col = 0.0;
          for (std::size_t i = 0; i < w; ++i) col += r[i] * k[i * w + j] * c[j];
          worst = std::max(worst, std::abs(col - 1.0));
        }
        done = worst <= tol;
      }
      res.iterations = std::max(res.iterations, it);
      res.converged = res.converged && done;
      double* dst = res.plan.plane(n, h);
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) dst[i * w + j] = r[i] * k[i * w + j] * c[j];
    }
  }
  res.violation = ot::marginal_violation(res.plan);
  return res;
}

double max_abs_gap(const BasicTensor<double>& a, const BasicTensor<double>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_gap");
  double gap = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap;
}

}  // namespace msinet::verify

#include "msinet/network.hpp"

#include <algorithm>
#include <cmath>


namespace msinet {

std::string block_prefix(const ModelConfig& cfg, std::size_t block, bool right_view) {
  std::string p = "block." + std::to_string(block);
  if (!cfg.share_view_weights) p += right_view ? ".right" : ".left";
  return p;
}

std::string deam_prefix(std::size_t stage) { return "deam." + std::to_string(stage); }

bool has_interaction(const ModelConfig& cfg, std::size_t block) {
  return !cfg.single_interaction || block + 1 == cfg.n_blocks;
}

std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  const std::size_t c = cfg.width;
  const auto shallow = ops::ConvSpec::dense(3, c, 3);
  specs.push_back({"shallow.weight", shallow.weight_shape(), ParamInit::kUniformFanIn, shallow.fan_in()});
  specs.push_back({"shallow.bias", Shape{1, c, 1, 1}, ParamInit::kZero, 1});
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    blocks::append_mscab_specs(specs, block_prefix(cfg, i, false), c, cfg.lska_branches);
    if (!cfg.share_view_weights) blocks::append_mscab_specs(specs, block_prefix(cfg, i, true), c, cfg.lska_branches);
    if (has_interaction(cfg, i)) ot::append_deam_specs(specs, deam_prefix(i), c);
  }
  const auto head = ops::ConvSpec::dense(c, 3 * cfg.scale * cfg.scale, 3);
  specs.push_back({"head.weight", head.weight_shape(), ParamInit::kUniformFanIn, head.fan_in()});
  specs.push_back({"head.bias", Shape{1, head.out_ch, 1, 1}, ParamInit::kZero, 1});
  return specs;
}

WeightStore init_model(const ModelConfig& cfg, std::uint64_t seed) { return init_params(model_param_specs(cfg), seed); }

template <class T>
BasicTensor<T> bilinear_upsample(const BasicTensor<T>& x, std::size_t r) {
  if (r < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
  const Shape& s = x.shape();
  const std::size_t oh = s.h * r;
  const std::size_t ow = s.w * r;
  struct Tap {
    std::size_t i0, i1;
    T frac;
  };
  auto taps = [r](std::size_t out, std::size_t in) {
    std::vector<Tap> t(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) / static_cast<double>(r) - 0.5;
      src = std::max(src, 0.0);
      const auto i0 = std::min(static_cast<std::size_t>(src), in - 1);
      const auto i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, static_cast<T>(src - static_cast<double>(i0))};
    }
    return t;
  };
  const auto ty = taps(oh, s.h);
  const auto tx = taps(ow, s.w);
  BasicTensor<T> out(Shape{s.n, s.c, oh, ow});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t y = 0; y < oh; ++y) {
        const T* r0 = in + ty[y].i0 * s.w;
        const T* r1 = in + ty[y].i1 * s.w;
        const T fy = ty[y].frac;
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const auto& t = tx[xx];
          const T top = r0[t.i0] + (r0[t.i1] - r0[t.i0]) * t.frac;
          const T bot = r1[t.i0] + (r1[t.i1] - r1[t.i0]) * t.frac;
          o[y * ow + xx] = top + (bot - top) * fy;
        }
      }
    }
  return out;
}

template <class T>
StereoVars<T> forward(const ParamBinding<T>& params, const ModelConfig& cfg, StereoVars<T> lr, bool interaction) {
  cfg.validate();
  for (auto v : {lr.left, lr.right}) {
    if (v.shape().c != 3) {
      throw ShapeError("forward: channel dimension mismatch (got " + std::to_string(v.shape().c) +
                       ", expected 3 image channels)");
    }
  }
  require_same_shape(lr.right.shape(), lr.left.shape(), "forward stereo pair");

  const std::size_t c = cfg.width;
  const auto conv3 = ops::ConvSpec::dense(3, c, 3);
  auto x_l = ad::conv2d(lr.left, conv3, params["shallow.weight"], params["shallow.bias"]);
  auto x_r = ad::conv2d(lr.right, conv3, params["shallow.weight"], params["shallow.bias"]);

  const ot::SinkhornConfig sink{cfg.sinkhorn_iters};
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    const auto pl = blocks::bind_mscab(params, block_prefix(cfg, i, false), c, cfg.lska_branches);
    x_l = blocks::mscab_forward(x_l, pl);
    if (cfg.share_view_weights) {
      x_r = blocks::mscab_forward(x_r, pl);
    } else {
      x_r = blocks::mscab_forward(x_r, blocks::bind_mscab(params, block_prefix(cfg, i, true), c, cfg.lska_branches));
    }
    if (interaction && has_interaction(cfg, i)) {
      auto out = ot::deam_forward(x_l, x_r, ot::bind_deam(params, deam_prefix(i)), sink);
      x_l = out.f_l;
      x_r = out.f_r;
    }
  }

  const auto head = ops::ConvSpec::dense(c, 3 * cfg.scale * cfg.scale, 3);
  auto reconstruct = [&](ad::Var<T> x, ad::Var<T> image) {
    auto y = ad::pixel_shuffle(ad::conv2d(x, head, params["head.weight"], params["head.bias"]), cfg.scale);
    if (!cfg.global_residual) return y;
    return ad::add(y, image.tape().constant(bilinear_upsample(image.value(), cfg.scale)));
  };
  return {reconstruct(x_l, lr.left), reconstruct(x_r, lr.right)};
}

StereoPair forward(const StereoPair& lr, const WeightStore& weights, const ModelConfig& cfg) {
  ad::GradTape<float> tape;
  ParamBinding<float> params(tape, weights, false);
  auto out = forward(params, cfg, StereoVars<float>{tape.constant(lr.left), tape.constant(lr.right)});
  return {out.left.value(), out.right.value()};
}

template BasicTensor<float> bilinear_upsample(const BasicTensor<float>&, std::size_t);
template BasicTensor<double> bilinear_upsample(const BasicTensor<double>&, std::size_t);
template StereoVars<float> forward(const ParamBinding<float>&, const ModelConfig&, StereoVars<float>, bool);
template StereoVars<double> forward(const ParamBinding<double>&, const ModelConfig&, StereoVars<double>, bool);

}  // namespace msinet

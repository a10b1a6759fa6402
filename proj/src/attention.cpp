#include "msinet/attention.hpp"

namespace msinet::blocks {
namespace {

void append_conv(std::vector<ParamSpec>& out, const std::string& name, const ops::ConvSpec& spec) {
  out.push_back({name + ".weight", spec.weight_shape(), ParamInit::kUniformFanIn, spec.fan_in()});
  out.push_back({name + ".bias", Shape{1, spec.out_ch, 1, 1}, ParamInit::kZero, 1});
}

void append_channel(std::vector<ParamSpec>& out, const std::string& name, std::size_t c, ParamInit init) {
  out.push_back({name, Shape{1, c, 1, 1}, init, 1});
}

template <class T>
ConvParams<T> bind_conv(const ParamBinding<T>& p, const std::string& name) {
  return {p[name + ".weight"], p[name + ".bias"]};
}

template <class T>
ad::Var<T> apply(ad::Var<T> x, const ops::ConvSpec& spec, const ConvParams<T>& c) {
  return ad::conv2d(x, spec, c.weight, c.bias);
}

template <class T>
void require_width(ad::Var<T> x, std::size_t width, const char* op) {
  if (x.shape().c != width) {
    throw ShapeError(std::string(op) + ": channel dimension mismatch (got " + std::to_string(x.shape().c) +
                     ", expected " + std::to_string(width) + ")");
  }
}

}  // namespace

ops::ConvSpec lska_conv_spec(std::size_t width, const LskaBranch& b, int stage) {
  switch (stage) {
    case 0: return ops::ConvSpec::depthwise(width, 1, b.base_k);
    case 1: return ops::ConvSpec::depthwise(width, b.base_k, 1);
    case 2: return ops::ConvSpec::depthwise(width, 1, b.dilated_k, 1, b.dilation);
    case 3: return ops::ConvSpec::depthwise(width, b.dilated_k, 1, b.dilation, 1);
    default: throw std::out_of_range("lska stage " + std::to_string(stage));
  }
}

void append_mscab_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c,
                        const std::vector<LskaBranch>& branches) {
  const std::string m = prefix + ".mscam";
  append_channel(out, m + ".norm.gain", c, ParamInit::kOne);
  append_channel(out, m + ".norm.shift", c, ParamInit::kZero);
  append_conv(out, m + ".expand", ops::ConvSpec::dense(c, 2 * c, 1));
  append_conv(out, m + ".dw", ops::ConvSpec::depthwise(2 * c, 3, 3));
  static constexpr const char* kStage[] = {"h0", "v0", "h1", "v1"};
  for (std::size_t b = 0; b < branches.size(); ++b) {
    for (int s = 0; s < 4; ++s) {
      append_conv(out, m + ".lska." + std::to_string(b) + "." + kStage[s], lska_conv_spec(c, branches[b], s));
    }
  }
  append_conv(out, m + ".lska.fuse", ops::ConvSpec::dense(c, c, 1));
  append_conv(out, m + ".sca", ops::ConvSpec::dense(c, c, 1));
  append_conv(out, m + ".project", ops::ConvSpec::dense(c, c, 1));
  append_channel(out, m + ".beta", c, ParamInit::kOne);

  const std::string f = prefix + ".sffn";
  append_channel(out, f + ".norm.gain", c, ParamInit::kOne);
  append_channel(out, f + ".norm.shift", c, ParamInit::kZero);
  append_conv(out, f + ".expand", ops::ConvSpec::dense(c, 2 * c, 1));
  append_conv(out, f + ".project", ops::ConvSpec::dense(c, c, 1));
  append_channel(out, f + ".psi", c, ParamInit::kOne);
}

template <class T>
MscabParams<T> bind_mscab(const ParamBinding<T>& p, const std::string& prefix, std::size_t width,
                          const std::vector<LskaBranch>& branches) {
  MscabParams<T> out;
  out.width = width;
  out.branches = branches;
  const std::string m = prefix + ".mscam";
  out.mscam_gain = p[m + ".norm.gain"];
  out.mscam_shift = p[m + ".norm.shift"];
  out.mscam_expand = bind_conv(p, m + ".expand");
  out.mscam_dw = bind_conv(p, m + ".dw");
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const std::string l = m + ".lska." + std::to_string(b);
    out.lska.push_back({bind_conv(p, l + ".h0"), bind_conv(p, l + ".v0"), bind_conv(p, l + ".h1"),
                        bind_conv(p, l + ".v1")});
  }
  out.lska_fuse = bind_conv(p, m + ".lska.fuse");
  out.sca = bind_conv(p, m + ".sca");
  out.mscam_project = bind_conv(p, m + ".project");
  out.beta = p[m + ".beta"];
  const std::string f = prefix + ".sffn";
  out.sffn_gain = p[f + ".norm.gain"];
  out.sffn_shift = p[f + ".norm.shift"];
  out.sffn_expand = bind_conv(p, f + ".expand");
  out.sffn_project = bind_conv(p, f + ".project");
  out.psi = p[f + ".psi"];
  return out;
}

template <class T>
ad::Var<T> sca(ad::Var<T> y, const ConvParams<T>& w) {
  const std::size_t c = y.shape().c;
  auto stats = ad::global_avg_pool(y);
  auto gains = apply(stats, ops::ConvSpec::dense(c, c, 1), w);
  return ad::scale_channels(y, gains);
}

template <class T>
ad::Var<T> lska_branch(ad::Var<T> y, const LskaBranch& branch, const LskaParams<T>& p) {
  const std::size_t c = y.shape().c;
  auto a = apply(y, lska_conv_spec(c, branch, 0), p.h0);
  a = apply(a, lska_conv_spec(c, branch, 1), p.v0);
  a = apply(a, lska_conv_spec(c, branch, 2), p.h1);
  return apply(a, lska_conv_spec(c, branch, 3), p.v1);
}

template <class T>
ad::Var<T> mslska(ad::Var<T> y, std::span<const LskaBranch> branches, std::span<const LskaParams<T>> params,
                  const ConvParams<T>& fuse) {
  if (branches.empty()) throw std::invalid_argument("mslska: at least one branch is required");
  if (branches.size() != params.size()) throw std::invalid_argument("mslska: branch/parameter count mismatch");
  ad::Var<T> total = lska_branch(y, branches[0], params[0]);
  for (std::size_t b = 1; b < branches.size(); ++b) total = ad::add(total, lska_branch(y, branches[b], params[b]));
  const std::size_t c = y.shape().c;
  auto attn = apply(total, ops::ConvSpec::dense(c, c, 1), fuse);
  return ad::mul(y, attn);
}

template <class T>
ad::Var<T> mscam(ad::Var<T> x, const MscabParams<T>& p) {
  require_width(x, p.width, "mscam");
  const std::size_t c = p.width;
  auto y = ad::layer_norm(x, p.mscam_gain, p.mscam_shift, kLayerNormEps);
  y = apply(y, ops::ConvSpec::dense(c, 2 * c, 1), p.mscam_expand);
  y = apply(y, ops::ConvSpec::depthwise(2 * c, 3, 3), p.mscam_dw);
  y = ad::simple_gate(y);
  y = mslska<T>(y, p.branches, p.lska, p.lska_fuse);
  y = sca(y, p.sca);
  y = apply(y, ops::ConvSpec::dense(c, c, 1), p.mscam_project);
  return ad::add(x, ad::scale_channels(y, p.beta));
}

template <class T>
ad::Var<T> sffn(ad::Var<T> x, const MscabParams<T>& p) {
  require_width(x, p.width, "sffn");
  const std::size_t c = p.width;
  auto y = ad::layer_norm(x, p.sffn_gain, p.sffn_shift, kLayerNormEps);
  y = apply(y, ops::ConvSpec::dense(c, 2 * c, 1), p.sffn_expand);
  y = ad::simple_gate(y);
  y = apply(y, ops::ConvSpec::dense(c, c, 1), p.sffn_project);
  return ad::add(x, ad::scale_channels(y, p.psi));
}

template <class T>
ad::Var<T> mscab_forward(ad::Var<T> x, const MscabParams<T>& p) {
  return sffn(mscam(x, p), p);
}

#define MSINET_INSTANTIATE_BLOCKS(T)                                                                       \
  template MscabParams<T> bind_mscab(const ParamBinding<T>&, const std::string&, std::size_t,              \
                                     const std::vector<LskaBranch>&);                                      \
  template ad::Var<T> sca(ad::Var<T>, const ConvParams<T>&);                                               \
  template ad::Var<T> lska_branch(ad::Var<T>, const LskaBranch&, const LskaParams<T>&);                    \
  template ad::Var<T> mslska(ad::Var<T>, std::span<const LskaBranch>, std::span<const LskaParams<T>>,      \
                             const ConvParams<T>&);                                                        \
  template ad::Var<T> mscam(ad::Var<T>, const MscabParams<T>&);                                            \
  template ad::Var<T> sffn(ad::Var<T>, const MscabParams<T>&);                                             \
  template ad::Var<T> mscab_forward(ad::Var<T>, const MscabParams<T>&);

MSINET_INSTANTIATE_BLOCKS(float)
MSINET_INSTANTIATE_BLOCKS(double)

#undef MSINET_INSTANTIATE_BLOCKS

}  // namespace msinet::blocks

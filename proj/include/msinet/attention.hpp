#pragma once

// Multi-scale spatial-channel attention block: MSCAM (layer norm, 1x1 expand,
// depthwise 3x3, simple gate, multi-scale large separable kernel attention,
// simplified channel attention, 1x1 project, scaled residual) followed by SFFN.
// No pointwise activation other than the simple gate.

#include <span>
#include <string>
#include <vector>

#include "msinet/autodiff.hpp"
#include "msinet/config.hpp"
#include "msinet/weights.hpp"

namespace msinet::blocks {

template <class T>
struct ConvParams {
  ad::Var<T> weight;
  ad::Var<T> bias;
};

/// Four depthwise convolutions: 1xk, kx1, then dilated 1xk', k'x1.
template <class T>
struct LskaParams {
  ConvParams<T> h0;
  ConvParams<T> v0;
  ConvParams<T> h1;
  ConvParams<T> v1;
};

template <class T>
struct MscabParams {
  std::size_t width = 0;
  std::vector<LskaBranch> branches;

  ad::Var<T> mscam_gain;
  ad::Var<T> mscam_shift;
  ConvParams<T> mscam_expand;   // 1x1, C -> 2C
  ConvParams<T> mscam_dw;       // depthwise 3x3 on 2C
  std::vector<LskaParams<T>> lska;
  ConvParams<T> lska_fuse;      // 1x1, C -> C, after branch summation
  ConvParams<T> sca;            // 1x1, C -> C, on pooled statistics
  ConvParams<T> mscam_project;  // 1x1, C -> C
  ad::Var<T> beta;

  ad::Var<T> sffn_gain;
  ad::Var<T> sffn_shift;
  ConvParams<T> sffn_expand;   // 1x1, C -> 2C
  ConvParams<T> sffn_project;  // 1x1, C -> C
  ad::Var<T> psi;
};

/// Stage 0..3 of a branch: 1xbase, basex1, 1xdilated (dilated along w), dilatedx1 (dilated along h).
ops::ConvSpec lska_conv_spec(std::size_t width, const LskaBranch& branch, int stage);

void append_mscab_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t width,
                        const std::vector<LskaBranch>& branches);

template <class T>
MscabParams<T> bind_mscab(const ParamBinding<T>& params, const std::string& prefix, std::size_t width,
                          const std::vector<LskaBranch>& branches);

/// y * conv1x1(global_avg_pool(y)).
template <class T>
ad::Var<T> sca(ad::Var<T> y, const ConvParams<T>& w);

template <class T>
ad::Var<T> lska_branch(ad::Var<T> y, const LskaBranch& branch, const LskaParams<T>& p);

/// y * fuse(sum of branch outputs).
template <class T>
ad::Var<T> mslska(ad::Var<T> y, std::span<const LskaBranch> branches, std::span<const LskaParams<T>> params,
                  const ConvParams<T>& fuse);

template <class T>
ad::Var<T> mscam(ad::Var<T> x, const MscabParams<T>& p);

template <class T>
ad::Var<T> sffn(ad::Var<T> x, const MscabParams<T>& p);

template <class T>
ad::Var<T> mscab_forward(ad::Var<T> x, const MscabParams<T>& p);

}  // namespace msinet::blocks

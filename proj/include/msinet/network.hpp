#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msinet/attention.hpp"
#include "msinet/config.hpp"
#include "msinet/ot_attention.hpp"
#include "msinet/weights.hpp"

namespace msinet {

template <class T>
struct BasicStereoPair {
  BasicTensor<T> left;
  BasicTensor<T> right;
};

using StereoPair = BasicStereoPair<float>;

template <class T>
struct StereoVars {
  ad::Var<T> left;
  ad::Var<T> right;
};

/// Every parameter of the model in canonical order.
std::vector<ParamSpec> model_param_specs(const ModelConfig& cfg);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) conv weights, zero biases, unit norm
/// gains and residual scales, zero fusion scales. Deterministic in (cfg, seed).
WeightStore init_model(const ModelConfig& cfg, std::uint64_t seed);

std::string block_prefix(const ModelConfig& cfg, std::size_t block, bool right_view);
std::string deam_prefix(std::size_t stage);
/// Whether a cross-view stage follows block i.
bool has_interaction(const ModelConfig& cfg, std::size_t block);

/// Align-corners-false bilinear interpolation to (r*H, r*W).
template <class T>
BasicTensor<T> bilinear_upsample(const BasicTensor<T>& x, std::size_t r);

/// Shallow 3x3 conv, N blocks each followed by cross-view attention, 3x3 conv to
/// 3r^2 channels, pixel shuffle, plus the bilinear skip when enabled. With
/// `interaction = false` the cross-view stages are skipped.
template <class T>
StereoVars<T> forward(const ParamBinding<T>& params, const ModelConfig& cfg, StereoVars<T> lr,
                      bool interaction = true);

/// Inference convenience over float images in [0, 1].
StereoPair forward(const StereoPair& lr, const WeightStore& weights, const ModelConfig& cfg);

}  // namespace msinet

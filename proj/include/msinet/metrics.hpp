#pragma once

#include "msinet/tensor.hpp"

namespace msinet::metrics {

/// Reported when the two images are identical.
inline constexpr double kPsnrCap = 100.0;

/// 10 * log10(1 / MSE) over every element, for images in [0, 1].
double psnr(const Tensor& a, const Tensor& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, averaged over valid window positions and over all planes.
double ssim(const Tensor& a, const Tensor& b);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

}  // namespace msinet::metrics

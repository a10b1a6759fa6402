#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "msinet/tensor.hpp"

namespace msinet {

/// Interleaved 8-bit RGB, row-major.
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const ImageBuffer&) const = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accepts 8-bit RGB, RGBA, gray and gray+alpha. Alpha is composited onto black and
/// gray is promoted to RGB.
/// 16-bit and palette images are rejected.
ImageBuffer load_png(const std::filesystem::path& path);
void save_png(const ImageBuffer& image, const std::filesystem::path& path);

/// (1, 3, H, W) in [0, 1].
Tensor to_tensor(const ImageBuffer& image);
/// Expects (1, 3, H, W); values are scaled by 255, rounded half up and clamped.
ImageBuffer from_tensor(const Tensor& x);

/// Antialiased bicubic (a = -0.5) downsampling by an integer factor, with
/// symmetric border handling.
Tensor bicubic_downsample(const Tensor& x, std::size_t r);

}  // namespace msinet

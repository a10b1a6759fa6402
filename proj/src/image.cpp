#include "msinet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace msinet {

namespace {

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::string describe(const png_image& img) { return img.message[0] != '\0' ? img.message : "unknown error"; }

}  // namespace

ImageBuffer load_png(const std::filesystem::path& path) {
  PngImage png;
  const std::string file = path.string();
  if (!png_image_begin_read_from_file(&png.image, file.c_str())) {
    throw ImageError(file + ": " + describe(png.image));
  }
  if (png.image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw ImageError(file + ": 16-bit PNG is not supported");
  }
  if (png.image.format & PNG_FORMAT_FLAG_COLORMAP) {
    throw ImageError(file + ": palette PNG is not supported");
  }
  png.image.format = PNG_FORMAT_RGB;
  ImageBuffer out;
  out.width = png.image.width;
  out.height = png.image.height;
  out.rgb.resize(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, out.rgb.data(), 0, nullptr)) {
    throw ImageError(file + ": " + describe(png.image));
  }
  return out;
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  if (image.rgb.size() != image.width * image.height * 3) {
    throw std::invalid_argument("save_png: buffer size does not match dimensions");
  }
  PngImage png;
  png.image.width = static_cast<png_uint_32>(image.width);
  png.image.height = static_cast<png_uint_32>(image.height);
  png.image.format = PNG_FORMAT_RGB;
  const std::string file = path.string();
  if (!png_image_write_to_file(&png.image, file.c_str(), 0, image.rgb.data(), 0, nullptr)) {
    throw ImageError(file + ": " + describe(png.image));
  }
}

Tensor to_tensor(const ImageBuffer& image) {
  const std::size_t h = image.height, w = image.width;
  Tensor out(Shape{1, 3, h, w});
  for (std::size_t c = 0; c < 3; ++c) {
    float* dst = out.plane(0, c);
    for (std::size_t i = 0; i < h * w; ++i) dst[i] = static_cast<float>(image.rgb[i * 3 + c]) / 255.0f;
  }
  return out;
}

ImageBuffer from_tensor(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError("from_tensor: expected (1, 3, H, W), got " + s.str());
  ImageBuffer out{s.w, s.h, std::vector<std::uint8_t>(s.h * s.w * 3)};
  for (std::size_t c = 0; c < 3; ++c) {
    const float* src = x.plane(0, c);
    for (std::size_t i = 0; i < s.h * s.w; ++i) {
      const double v = std::floor(static_cast<double>(src[i]) * 255.0 + 0.5);
      out.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

namespace {

double cubic(double x) {
  const double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

std::size_t reflect(long i, long n) {
  // symmetric padding: -1 -> 0, n -> n-1
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
  std::size_t width = 0;
};

Taps resample_taps(std::size_t in_len, std::size_t r) {
  const std::size_t out_len = in_len / r;
  const double scale = 1.0 / static_cast<double>(r);
  const double kernel_width = 4.0 / scale;
  const std::size_t taps = static_cast<std::size_t>(std::ceil(kernel_width)) + 2;
  Taps t;
  t.width = taps;
  t.index.resize(out_len * taps);
  t.weight.resize(out_len * taps);
  for (std::size_t o = 0; o < out_len; ++o) {
    const double u = (static_cast<double>(o) + 1.0) / scale + 0.5 * (1.0 - 1.0 / scale);
    const long left = static_cast<long>(std::floor(u - kernel_width / 2.0));
    double total = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const long idx = left + static_cast<long>(k);
      const double wgt = scale * cubic(scale * (u - static_cast<double>(idx)));
      t.index[o * taps + k] = reflect(idx - 1, static_cast<long>(in_len));
      t.weight[o * taps + k] = wgt;
      total += wgt;
    }
    for (std::size_t k = 0; k < taps; ++k) t.weight[o * taps + k] /= total;
  }
  return t;
}

}  // namespace

Tensor bicubic_downsample(const Tensor& x, std::size_t r) {
  if (r == 0) throw std::invalid_argument("bicubic_downsample: factor must be >= 1");
  const Shape& s = x.shape();
  if (s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("bicubic_downsample: " + s.str() + " is not divisible by " + std::to_string(r));
  }
  if (r == 1) return x;
  const std::size_t oh = s.h / r, ow = s.w / r;
  const Taps th = resample_taps(s.h, r);
  const Taps tw = resample_taps(s.w, r);
  Tensor out(Shape{s.n, s.c, oh, ow});
  std::vector<double> rows(oh * s.w);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const float* src = x.plane(n, c);
      for (std::size_t o = 0; o < oh; ++o) {
        for (std::size_t j = 0; j < s.w; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < th.width; ++k) {
            acc += th.weight[o * th.width + k] * src[th.index[o * th.width + k] * s.w + j];
          }
          rows[o * s.w + j] = acc;
        }
      }
      float* dst = out.plane(n, c);
      for (std::size_t o = 0; o < oh; ++o) {
        for (std::size_t q = 0; q < ow; ++q) {
          double acc = 0.0;
          for (std::size_t k = 0; k < tw.width; ++k) {
            acc += tw.weight[q * tw.width + k] * rows[o * s.w + tw.index[q * tw.width + k]];
          }
          dst[o * ow + q] = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

}  // namespace msinet

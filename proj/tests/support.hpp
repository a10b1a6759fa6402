#pragma once

// Shared fixtures and reference implementations for the test binaries. The
// references are written from the textbook definitions and share no code with
// the library kernels they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "msinet/network.hpp"
#include "msinet/rng.hpp"
#include "msinet/tensor.hpp"

namespace msinet::testing {

template <class T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

/// Cross-correlation by direct summation over the receptive field.
template <class T>
BasicTensor<double> conv_direct(const BasicTensor<T>& x, std::size_t out_ch, std::size_t groups, std::size_t dh,
                                std::size_t dw, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  const Shape s = x.shape();
  const Shape ws = weight.shape();
  const long kh = long(ws.h), kw = long(ws.w);
  const long ph = (kh - 1) * long(dh) / 2, pw = (kw - 1) * long(dw) / 2;
  const std::size_t in_per = s.c / groups, out_per = out_ch / groups;
  BasicTensor<double> out(Shape{s.n, out_ch, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t o = 0; o < out_ch; ++o)
      for (long y = 0; y < long(s.h); ++y)
        for (long x0 = 0; x0 < long(s.w); ++x0) {
          double acc = bias.numel() ? double(bias[o]) : 0.0;
          const std::size_t g = o / out_per;
          for (std::size_t ci = 0; ci < in_per; ++ci)
            for (long a = 0; a < kh; ++a)
              for (long b = 0; b < kw; ++b) {
                const long yy = y + a * long(dh) - ph, xx = x0 + b * long(dw) - pw;
                if (yy < 0 || xx < 0 || yy >= long(s.h) || xx >= long(s.w)) continue;
                acc += double(weight.at(o, ci, a, b)) * double(x.at(n, g * in_per + ci, yy, xx));
              }
          out.at(n, o, y, x0) = acc;
        }
  return out;
}

/// X[u, v] = sum x[h, w] exp(-2 pi i (u h / H + v w / W)), O((HW)^2).
inline std::vector<std::complex<double>> dft_direct(const double* x, std::size_t h, std::size_t w) {
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t a = 0; a < h; ++a)
        for (std::size_t b = 0; b < w; ++b) {
          const double phase = -2.0 * std::numbers::pi * (double(u * a) / double(h) + double(v * b) / double(w));
          acc += x[a * w + b] * std::polar(1.0, phase);
        }
      out[u * w + v] = acc;
    }
  return out;
}

/// Plain triple loop, row-major P x K times K x Q.
inline std::vector<double> matmul_direct(const std::vector<double>& a, const std::vector<double>& b, std::size_t p,
                                         std::size_t k, std::size_t q) {
  std::vector<double> out(p * q, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t t = 0; t < k; ++t) out[i * q + j] += a[i * k + t] * b[t * q + j];
  return out;
}

/// SSIM evaluated window by window with the full 2-D Gaussian (no separable
/// filtering), averaged over planes and valid positions.
inline double ssim_direct(const Tensor& a, const Tensor& b) {
  const std::size_t win = 11;
  const double sigma = 1.5;
  std::vector<double> g(win * win);
  double total = 0.0;
  for (std::size_t i = 0; i < win; ++i)
    for (std::size_t j = 0; j < win; ++j) {
      const double di = double(i) - 5.0, dj = double(j) - 5.0;
      g[i * win + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += g[i * win + j];
    }
  for (auto& v : g) v /= total;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Shape s = a.shape();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y + win <= s.h; ++y)
        for (std::size_t x = 0; x + win <= s.w; ++x) {
          double ma = 0, mb = 0;
          for (std::size_t i = 0; i < win; ++i)
            for (std::size_t j = 0; j < win; ++j) {
              ma += g[i * win + j] * a.at(n, c, y + i, x + j);
              mb += g[i * win + j] * b.at(n, c, y + i, x + j);
            }
          double va = 0, vb = 0, cov = 0;
          for (std::size_t i = 0; i < win; ++i)
            for (std::size_t j = 0; j < win; ++j) {
              const double da = a.at(n, c, y + i, x + j) - ma, db = b.at(n, c, y + i, x + j) - mb;
              va += g[i * win + j] * da * da;
              vb += g[i * win + j] * db * db;
              cov += g[i * win + j] * da * db;
            }
          sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
          ++count;
        }
  return sum / double(count);
}

/// Smooth two-tone background with soft-edged discs; the right view sees the
/// same scene shifted by `disparity` pixels.
inline Tensor synthetic_view(std::size_t h, std::size_t w, double disparity, std::uint64_t seed) {
  Tensor t(Shape{1, 3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double xs = double(x) + 0.5 + disparity, ys = double(y) + 0.5;
        double v = 0.5 + 0.2 * std::sin(2 * std::numbers::pi * (xs / 37.0 + ys / 53.0 + double(c) * 0.3)) +
                   0.15 * std::cos(2 * std::numbers::pi * (xs / 23.0 - ys / 31.0 + double(c) * 0.1));
        Rng discs(seed * 31 + 5);
        for (int k = 0; k < 8; ++k) {
          const double cx = discs.uniform(0, double(w)), cy = discs.uniform(0, double(h));
          const double rad = discs.uniform(6, 20), col = discs.uniform();
          const double a = 0.5 * (1 - std::tanh((std::hypot(xs - cx, ys - cy) - rad) / 4.0));
          v = (1 - a) * v + a * (0.5 * col + 0.25 * double(c) * col);
        }
        t.at(0, c, y, x) = float(std::clamp(v, 0.0, 1.0));
      }
  return t;
}

inline StereoPair synthetic_pair(std::size_t h, std::size_t w, std::uint64_t seed = 7) {
  return {synthetic_view(h, w, 0.0, seed), synthetic_view(h, w, 6.0, seed)};
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("msinet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace msinet::testing

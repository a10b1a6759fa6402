#include "msinet/dft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace msinet {
namespace {

// One cached in-place forward c2c plan per plane size. The FFTW planner is not
// reentrant, so planning and execution share one lock.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, entry] : plans_) {
      fftw_destroy_plan(entry.plan);
      fftw_free(entry.buffer);
    }
  }

  template <class Fill, class Drain>
  void run(std::size_t h, std::size_t w, Fill&& fill, Drain&& drain) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({h, w});
    if (it == plans_.end()) {
      Entry e;
      e.buffer = fftw_alloc_complex(h * w);
      e.plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), e.buffer, e.buffer, FFTW_FORWARD,
                                FFTW_ESTIMATE);
      it = plans_.emplace(std::make_pair(h, w), e).first;
    }
    fill(it->second.buffer);
    fftw_execute(it->second.plan);
    drain(it->second.buffer);
  }

 private:
  struct Entry {
    fftw_plan plan = nullptr;
    fftw_complex* buffer = nullptr;
  };
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, Entry> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

template <class T>
Spectrum<T> dft2(const BasicTensor<T>& x) {
  const Shape& s = x.shape();
  Spectrum<T> out{BasicTensor<T>(s), BasicTensor<T>(s)};
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = x.plane(n, c);
      T* re = out.real.plane(n, c);
      T* im = out.imag.plane(n, c);
      plan_cache().run(
          s.h, s.w,
          [&](fftw_complex* buf) {
            for (std::size_t p = 0; p < plane; ++p) {
              buf[p][0] = static_cast<double>(in[p]);
              buf[p][1] = 0.0;
            }
          },
          [&](const fftw_complex* buf) {
            for (std::size_t p = 0; p < plane; ++p) {
              re[p] = static_cast<T>(buf[p][0]);
              im[p] = static_cast<T>(buf[p][1]);
            }
          });
    }
  }
  return out;
}

// d/dx[h,w] = sum_{u,v} gr*cos(theta) - gi*sin(theta) = Re(DFT(gr - i*gi)).
template <class T>
BasicTensor<T> dft2_backward(const BasicTensor<T>& grad_real, const BasicTensor<T>& grad_imag) {
  const Shape& s = grad_real.shape();
  require_same_shape(grad_imag.shape(), s, "dft2 gradient");
  BasicTensor<T> dx(s);
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* gr = grad_real.plane(n, c);
      const T* gi = grad_imag.plane(n, c);
      T* d = dx.plane(n, c);
      plan_cache().run(
          s.h, s.w,
          [&](fftw_complex* buf) {
            for (std::size_t p = 0; p < plane; ++p) {
              buf[p][0] = static_cast<double>(gr[p]);
              buf[p][1] = -static_cast<double>(gi[p]);
            }
          },
          [&](const fftw_complex* buf) {
            for (std::size_t p = 0; p < plane; ++p) d[p] = static_cast<T>(buf[p][0]);
          });
    }
  }
  return dx;
}

template Spectrum<float> dft2(const BasicTensor<float>&);
template Spectrum<double> dft2(const BasicTensor<double>&);
template BasicTensor<float> dft2_backward(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> dft2_backward(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace msinet

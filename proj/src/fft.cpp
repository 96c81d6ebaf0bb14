#include "reconlab/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace reconlab {

namespace {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans;

  fftw_plan get(std::size_t h, std::size_t w, int sign) {
    std::lock_guard lock(mutex);
    auto key = std::make_tuple(h, w, sign);
    if (auto it = plans.find(key); it != plans.end()) {
      return it->second;
    }
    std::vector<cdouble> scratch(h * w);
    auto *p = reinterpret_cast<fftw_complex *>(scratch.data());
    // ESTIMATE keeps planning deterministic; UNALIGNED lets any buffer execute the plan.
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), p, p, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) {
      throw ShapeError("unsupported FFT size " + std::to_string(h) + "x" + std::to_string(w));
    }
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache &plan_cache() {
  static PlanCache cache;
  return cache;
}

// Cyclic shift by (sy, sx) into a scratch buffer and back.
void shift2(std::span<cdouble> data, std::size_t h, std::size_t w, std::size_t sy, std::size_t sx) {
  std::vector<cdouble> tmp(data.begin(), data.end());
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t dy = (y + sy) % h;
    for (std::size_t x = 0; x < w; ++x) {
      data[dy * w + (x + sx) % w] = tmp[y * w + x];
    }
  }
}

} // namespace

Fft2::Fft2(std::size_t height, std::size_t width) : height_(height), width_(width) {
  if (height == 0 || width == 0) {
    throw ShapeError("FFT size must be positive");
  }
  forward_plan_ = plan_cache().get(height, width, FFTW_FORWARD);
  inverse_plan_ = plan_cache().get(height, width, FFTW_BACKWARD);
}

void Fft2::run(std::span<cdouble> data, bool inverse) const {
  if (data.size() != height_ * width_) {
    throw ShapeError("FFT buffer size mismatch");
  }
  // ifftshift moves index floor(n/2) to 0; fftshift moves it back.
  shift2(data, height_, width_, height_ - height_ / 2, width_ - width_ / 2);
  auto *p = reinterpret_cast<fftw_complex *>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(inverse ? inverse_plan_ : forward_plan_), p, p);
  shift2(data, height_, width_, height_ / 2, width_ / 2);
}

void Fft2::forward(std::span<cdouble> data) const { run(data, false); }
void Fft2::inverse(std::span<cdouble> data) const { run(data, true); }

ComplexFrame fft2_centered(const ComplexFrame &frame) {
  ComplexFrame out = frame;
  Fft2(frame.height, frame.width).forward(out.data);
  const double scale = 1.0 / std::sqrt(static_cast<double>(frame.height * frame.width));
  for (auto &v : out.data) {
    v *= scale;
  }
  return out;
}

ComplexFrame ifft2_centered(const ComplexFrame &frame) {
  ComplexFrame out = frame;
  Fft2(frame.height, frame.width).inverse(out.data);
  const double scale = 1.0 / std::sqrt(static_cast<double>(frame.height * frame.width));
  for (auto &v : out.data) {
    v *= scale;
  }
  return out;
}

} // namespace reconlab

#pragma once

#include <cstddef>
#include <span>

#include "reconlab/tensor.hpp"

namespace reconlab {

// Centered 2D FFT (DC at index floor(n/2)) over a row-major height x width
// buffer. Plans are created once per size and shared; execution is thread-safe.
class Fft2 {
public:
  Fft2(std::size_t height, std::size_t width);

  // In-place, unnormalized: forward uses exp(-2 pi i ...), inverse exp(+2 pi i ...).
  void forward(std::span<cdouble> data) const;
  void inverse(std::span<cdouble> data) const;

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

private:
  void run(std::span<cdouble> data, bool inverse) const;

  std::size_t height_;
  std::size_t width_;
  void *forward_plan_;
  void *inverse_plan_;
};

// Unitary centered transforms (1/sqrt(HW) each direction).
ComplexFrame fft2_centered(const ComplexFrame &frame);
ComplexFrame ifft2_centered(const ComplexFrame &frame);

} // namespace reconlab

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "reconlab/fft.hpp"
#include "reconlab/tensor.hpp"
#include "reconlab/trajectory.hpp"

namespace reconlab {

// Kaiser-Bessel interpolation kernel on the oversampled grid.
struct GriddingKernel {
  double width = 4.0;
  double oversampling = 1.5;
  double beta = 0.0;

  // Beatty et al. minimal-aliasing beta for the given width and grid ratio.
  static GriddingKernel kaiser_bessel(double width = 4.0, double oversampling = 1.5);

  // Kernel value at offset u (grid cells); zero for |u| > width / 2.
  double value(double u) const;
  // Continuous Fourier transform of value() at image-domain frequency t
  // (cycles per grid cell).
  double transform(double t) const;

  void validate() const;
};

// Non-uniform FFT between an H x W image and radial samples, unitary
// convention: y(k) = (1/sqrt(HW)) sum_n x_n exp(-2 pi i k.(n - c)), c the
// centre pixel (floor(H/2), floor(W/2)). Interpolation weights are
// precomputed for the spoke set so repeated applications are cheap.
class Nufft {
public:
  Nufft(std::size_t height, std::size_t width, const SpokeSet &spokes,
        GriddingKernel kernel = GriddingKernel::kaiser_bessel());

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t samples() const { return nsamples_; }
  const GriddingKernel &kernel() const { return kernel_; }

  // Degridding: image -> radial samples.
  std::vector<cdouble> forward(const ComplexFrame &image) const;
  // Exact adjoint of forward().
  ComplexFrame adjoint(std::span<const cdouble> samples) const;
  // Adjoint with ramp density compensation applied to the samples first.
  ComplexFrame adjoint_compensated(std::span<const cdouble> samples) const;

  // Ramp |r| area weights, normalized so that a fully sampled acquisition
  // is recovered at unit scale. A DC sample sits on every spoke, so each copy
  // gets a quarter of the smallest nonzero weight (the central disc area split across spokes).
  const std::vector<double> &density_weights() const { return density_; }

  // Grid-domain halves of the operator, exposed for the kernel benchmarks.
  void interpolate(std::span<const cdouble> grid, std::span<cdouble> samples) const;
  void spread(std::span<const cdouble> samples, std::span<cdouble> grid) const;
  void spread_serial(std::span<const cdouble> samples, std::span<cdouble> grid) const;
  std::size_t grid_height() const { return grid_h_; }
  std::size_t grid_width() const { return grid_w_; }

private:
  static constexpr std::size_t kTaps = 5;
  struct Taps {
    std::array<std::int32_t, kTaps> index{};
    std::array<double, kTaps> weight{};
  };

  std::size_t height_;
  std::size_t width_;
  std::size_t grid_h_;
  std::size_t grid_w_;
  std::size_t nsamples_;
  GriddingKernel kernel_;
  Fft2 fft_;
  std::vector<Taps> row_taps_;
  std::vector<Taps> col_taps_;
  std::vector<double> deapod_;
  std::vector<double> density_;
};

} // namespace reconlab

#include "reconlab/nufft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <omp.h>

namespace reconlab {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t oversampled_size(std::size_t n, double ratio) {
  auto g = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
  return g + (g % 2);
}

} // namespace

GriddingKernel GriddingKernel::kaiser_bessel(double width, double oversampling) {
  GriddingKernel k;
  k.width = width;
  k.oversampling = oversampling;
  const double a = (width / oversampling) * (oversampling - 0.5);
  k.beta = kPi * std::sqrt(std::max(a * a - 0.8, 0.0));
  k.validate();
  return k;
}

void GriddingKernel::validate() const {
  if (width < 2.0) {
    throw ConfigError("gridding kernel width must be >= 2");
  }
  if (oversampling < 1.0) {
    throw ConfigError("gridding oversampling must be >= 1");
  }
}

double GriddingKernel::value(double u) const {
  const double q = 2.0 * u / width;
  if (std::abs(q) > 1.0) {
    return 0.0;
  }
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - q * q));
}

double GriddingKernel::transform(double t) const {
  const double z = kPi * width * t;
  const double d = beta * beta - z * z;
  if (d > 1e-12) {
    const double s = std::sqrt(d);
    return width * std::sinh(s) / s;
  }
  if (d < -1e-12) {
    const double s = std::sqrt(-d);
    return width * std::sin(s) / s;
  }
  return width;
}

Nufft::Nufft(std::size_t height, std::size_t width, const SpokeSet &spokes, GriddingKernel kernel)
    : height_(height), width_(width), grid_h_(oversampled_size(height, kernel.oversampling)),
      grid_w_(oversampled_size(width, kernel.oversampling)), nsamples_(spokes.size()),
      kernel_(kernel), fft_(grid_h_, grid_w_) {
  kernel_.validate();
  if (spokes.kx.size() != spokes.ky.size()) {
    throw ShapeError("spoke coordinate arrays differ in length");
  }
  const double half = kernel_.width / 2.0;
  auto make_taps = [&](double k, std::size_t grid) {
    Taps taps;
    const double u = k * static_cast<double>(grid) + static_cast<double>(grid / 2);
    const auto first = static_cast<std::int64_t>(std::ceil(u - half));
    for (std::size_t j = 0; j < kTaps; ++j) {
      const std::int64_t m = first + static_cast<std::int64_t>(j);
      const auto g = static_cast<std::int64_t>(grid);
      taps.index[j] = static_cast<std::int32_t>(((m % g) + g) % g);
      taps.weight[j] = kernel_.value(u - static_cast<double>(m));
    }
    return taps;
  };
  row_taps_.resize(nsamples_);
  col_taps_.resize(nsamples_);
  for (std::size_t s = 0; s < nsamples_; ++s) {
    const double kx = spokes.kx[s];
    const double ky = spokes.ky[s];
    if (std::hypot(kx, ky) > 0.5 + 1e-9) {
      throw ShapeError("spoke coordinate outside |k| <= 0.5");
    }
    row_taps_[s] = make_taps(ky, grid_h_);
    col_taps_[s] = make_taps(kx, grid_w_);
  }

  // Image-domain deapodization for each axis.
  std::vector<double> dy(height_);
  std::vector<double> dx(width_);
  for (std::size_t y = 0; y < height_; ++y) {
    const double t = (static_cast<double>(y) - static_cast<double>(height_ / 2)) / static_cast<double>(grid_h_);
    dy[y] = kernel_.transform(t);
  }
  for (std::size_t x = 0; x < width_; ++x) {
    const double t = (static_cast<double>(x) - static_cast<double>(width_ / 2)) / static_cast<double>(grid_w_);
    dx[x] = kernel_.transform(t);
  }
  deapod_.resize(height_ * width_);
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) {
      deapod_[y * width_ + x] = dy[y] * dx[x];
    }
  }

  // Ramp weights: polar area element |r| dr dtheta scaled by H*W.
  density_.assign(nsamples_, 0.0);
  const std::size_t per_spoke = spokes.samples_per_spoke == 0 ? nsamples_ : spokes.samples_per_spoke;
  const std::size_t nspokes = std::max<std::size_t>(1, spokes.spokes());
  const double dr = per_spoke > 1 ? 1.0 / static_cast<double>(per_spoke - 1) : 1.0;
  const double scale = kPi / static_cast<double>(nspokes) * dr * static_cast<double>(height_ * width_);
  double smallest = 0.0;
  for (std::size_t s = 0; s < nsamples_; ++s) {
    const double r = std::hypot(spokes.kx[s], spokes.ky[s]);
    if (r > 1e-12) {
      density_[s] = r * scale;
      smallest = smallest == 0.0 ? density_[s] : std::min(smallest, density_[s]);
    }
  }
  for (std::size_t s = 0; s < nsamples_; ++s) {
    if (density_[s] == 0.0) {
      density_[s] = 0.25 * smallest;
    }
  }
}

void Nufft::interpolate(std::span<const cdouble> grid, std::span<cdouble> samples) const {
  const auto n = static_cast<std::int64_t>(nsamples_);
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n; ++s) {
    const Taps &rt = row_taps_[static_cast<std::size_t>(s)];
    const Taps &ct = col_taps_[static_cast<std::size_t>(s)];
    cdouble acc = 0.0;
    for (std::size_t i = 0; i < kTaps; ++i) {
      if (rt.weight[i] == 0.0) {
        continue;
      }
      const cdouble *row = grid.data() + static_cast<std::size_t>(rt.index[i]) * grid_w_;
      cdouble racc = 0.0;
      for (std::size_t j = 0; j < kTaps; ++j) {
        racc += ct.weight[j] * row[ct.index[j]];
      }
      acc += rt.weight[i] * racc;
    }
    samples[static_cast<std::size_t>(s)] = acc;
  }
}

void Nufft::spread_serial(std::span<const cdouble> samples, std::span<cdouble> grid) const {
  std::fill(grid.begin(), grid.end(), cdouble{});
  for (std::size_t s = 0; s < nsamples_; ++s) {
    const Taps &rt = row_taps_[s];
    const Taps &ct = col_taps_[s];
    for (std::size_t i = 0; i < kTaps; ++i) {
      if (rt.weight[i] == 0.0) {
        continue;
      }
      cdouble *row = grid.data() + static_cast<std::size_t>(rt.index[i]) * grid_w_;
      const cdouble v = rt.weight[i] * samples[s];
      for (std::size_t j = 0; j < kTaps; ++j) {
        row[ct.index[j]] += ct.weight[j] * v;
      }
    }
  }
}

// Each thread owns a band of grid rows and visits every sample in order, so
// every cell accumulates in the same order as spread_serial for any thread count.
void Nufft::spread(std::span<const cdouble> samples, std::span<cdouble> grid) const {
  std::fill(grid.begin(), grid.end(), cdouble{});
#pragma omp parallel
  {
    const auto nthreads = static_cast<std::size_t>(omp_get_num_threads());
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = grid_h_ * tid / nthreads;
    const std::size_t hi = grid_h_ * (tid + 1) / nthreads;
    for (std::size_t s = 0; s < nsamples_; ++s) {
      const Taps &rt = row_taps_[s];
      const Taps &ct = col_taps_[s];
      for (std::size_t i = 0; i < kTaps; ++i) {
        const auto r = static_cast<std::size_t>(rt.index[i]);
        if (r < lo || r >= hi || rt.weight[i] == 0.0) {
          continue;
        }
        cdouble *row = grid.data() + r * grid_w_;
        const cdouble v = rt.weight[i] * samples[s];
        for (std::size_t j = 0; j < kTaps; ++j) {
          row[ct.index[j]] += ct.weight[j] * v;
        }
      }
    }
  }
}

std::vector<cdouble> Nufft::forward(const ComplexFrame &image) const {
  if (image.height != height_ || image.width != width_) {
    throw ShapeError("NUFFT image dimension mismatch");
  }
  std::vector<cdouble> grid(grid_h_ * grid_w_);
  const std::size_t oy = grid_h_ / 2 - height_ / 2;
  const std::size_t ox = grid_w_ / 2 - width_ / 2;
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) {
      grid[(y + oy) * grid_w_ + x + ox] = image.data[y * width_ + x] / deapod_[y * width_ + x];
    }
  }
  fft_.forward(grid);
  std::vector<cdouble> samples(nsamples_);
  interpolate(grid, samples);
  const double scale = 1.0 / std::sqrt(static_cast<double>(height_ * width_));
  for (auto &v : samples) {
    v *= scale;
  }
  return samples;
}

ComplexFrame Nufft::adjoint(std::span<const cdouble> samples) const {
  if (samples.size() != nsamples_) {
    throw ShapeError("NUFFT sample count mismatch");
  }
  std::vector<cdouble> grid(grid_h_ * grid_w_);
  spread(samples, grid);
  fft_.inverse(grid);
  ComplexFrame image(height_, width_);
  const std::size_t oy = grid_h_ / 2 - height_ / 2;
  const std::size_t ox = grid_w_ / 2 - width_ / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(height_ * width_));
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) {
      image.data[y * width_ + x] = grid[(y + oy) * grid_w_ + x + ox] * (scale / deapod_[y * width_ + x]);
    }
  }
  return image;
}

ComplexFrame Nufft::adjoint_compensated(std::span<const cdouble> samples) const {
  if (samples.size() != nsamples_) {
    throw ShapeError("NUFFT sample count mismatch");
  }
  std::vector<cdouble> weighted(samples.begin(), samples.end());
  for (std::size_t s = 0; s < nsamples_; ++s) {
    weighted[s] *= density_[s];
  }
  return adjoint(weighted);
}

} // namespace reconlab

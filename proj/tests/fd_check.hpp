#pragma once

// Central finite-difference checks for the network layers, shared by the unit
// tests and the acceptance run. Each returns the worst relative error over
// the input, weight and bias gradients, where the relative error of one
// gradient array is max|analytic - numeric| / max|analytic|. Single-precision
// forward passes carry ~1e-3 absolute noise into a central difference at
// h = 1e-3, so per-element ratios on near-zero entries measure only that noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "reconlab/nn/kernels.hpp"
#include "reconlab/rng.hpp"

namespace fdcheck {

using reconlab::Rng;
namespace nn = reconlab::nn;

template <typename T>
constexpr double step() {
  return sizeof(T) == 4 ? 1e-3 : 1e-6;
}

inline double worst(const std::vector<double> &analytic, const std::vector<double> &numeric) {
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    err = std::max(err, std::abs(analytic[i] - numeric[i]));
  }
  return scale > 0.0 ? err / scale : err;
}

template <typename T>
std::vector<T> randn(std::size_t n, Rng &r, double scale = 1.0) {
  std::vector<T> v(n);
  for (auto &x : v) {
    x = static_cast<T>(scale * r.normal());
  }
  return v;
}

template <typename T>
double dot(const std::vector<T> &a, const std::vector<T> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

// d/dp of L(p) = <g, f(p)> for every entry of p, by central differences.
template <typename T, typename F>
std::vector<double> numeric_grad(std::vector<T> &p, const std::vector<T> &g, F &&forward) {
  const double h = step<T>();
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T keep = p[i];
    p[i] = static_cast<T>(keep + h);
    const double up = dot(g, forward());
    p[i] = static_cast<T>(keep - h);
    const double down = dot(g, forward());
    p[i] = keep;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

template <typename T>
std::vector<double> widen(const std::vector<T> &v) {
  return std::vector<double>(v.begin(), v.end());
}

template <typename T>
double conv3d(Rng &r, const nn::ConvShape &s) {
  auto x = randn<T>(s.cin * s.voxels(), r);
  auto w = randn<T>(s.cout * s.cin * s.taps(), r, 0.3);
  auto b = randn<T>(s.cout, r);
  const auto g = randn<T>(s.cout * s.voxels(), r);
  auto fwd = [&] {
    std::vector<T> y(s.cout * s.voxels());
    nn::conv3d_forward(s, x.data(), w.data(), b.data(), y.data());
    return y;
  };
  std::vector<T> gx(x.size()), gw(w.size()), gb(b.size());
  nn::conv3d_backward(s, x.data(), w.data(), g.data(), gx.data(), gw.data(), gb.data());
  return std::max({worst(widen(gx), numeric_grad(x, g, fwd)), worst(widen(gw), numeric_grad(w, g, fwd)),
                   worst(widen(gb), numeric_grad(b, g, fwd))});
}

template <typename T>
double maxpool3d(Rng &r, const nn::PoolShape &s) {
  // Distinct values spaced well beyond the step so no window changes its winner.
  std::vector<std::size_t> order(s.c * s.t * s.h * s.w);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[r.below(i)]);
  }
  std::vector<T> x(order.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<T>(0.05 * static_cast<double>(order[i]) - 1.0);
  }
  const std::size_t ny = s.c * s.out_voxels();
  const auto g = randn<T>(ny, r);
  auto fwd = [&] {
    std::vector<T> y(ny);
    std::vector<std::uint32_t> am(ny);
    nn::maxpool3d_forward(s, x.data(), y.data(), am.data());
    return y;
  };
  std::vector<T> y(ny), gx(x.size());
  std::vector<std::uint32_t> am(ny);
  nn::maxpool3d_forward(s, x.data(), y.data(), am.data());
  nn::maxpool3d_backward(s, g.data(), am.data(), gx.data());
  return worst(widen(gx), numeric_grad(x, g, fwd));
}

template <typename T>
double upconv3d(Rng &r, const nn::UpShape &s) {
  auto x = randn<T>(s.cin * s.in_voxels(), r);
  auto w = randn<T>(s.cin * s.cout * s.window(), r, 0.5);
  auto b = randn<T>(s.cout, r);
  const std::size_t ny = s.cout * s.in_voxels() * s.window();
  const auto g = randn<T>(ny, r);
  auto fwd = [&] {
    std::vector<T> y(ny);
    nn::upconv3d_forward(s, x.data(), w.data(), b.data(), y.data());
    return y;
  };
  std::vector<T> gx(x.size()), gw(w.size()), gb(b.size());
  nn::upconv3d_backward(s, x.data(), w.data(), g.data(), gx.data(), gw.data(), gb.data());
  return std::max({worst(widen(gx), numeric_grad(x, g, fwd)), worst(widen(gw), numeric_grad(w, g, fwd)),
                   worst(widen(gb), numeric_grad(b, g, fwd))});
}

template <typename T>
double relu(Rng &r, std::size_t n) {
  auto x = randn<T>(n, r);
  for (auto &v : x) {
    // Keep clear of the kink.
    if (std::abs(v) < T(0.05)) {
      v = v < 0 ? T(-0.05) : T(0.05);
    }
  }
  const auto g = randn<T>(n, r);
  auto fwd = [&] {
    std::vector<T> y(n);
    nn::relu_forward(n, x.data(), y.data());
    return y;
  };
  const auto y = fwd();
  std::vector<T> gx(n);
  nn::relu_backward(n, y.data(), g.data(), gx.data());
  return worst(widen(gx), numeric_grad(x, g, fwd));
}

} // namespace fdcheck

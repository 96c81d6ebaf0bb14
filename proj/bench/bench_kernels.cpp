// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include <vector>

#include "reconlab/nn/kernels.hpp"
#include "reconlab/nufft.hpp"
#include "reconlab/rng.hpp"
#include "reconlab/trajectory.hpp"

using namespace reconlab;

namespace {

// Desk-scale first encoder layer: 16 -> 16 channels on 20 x 64 x 64.
nn::ConvShape conv_shape() { return {16, 16, 20, 64, 64, 3, 3, 3}; }

struct ConvData {
  std::vector<float> x, w, b, y, gy, gx, gw, gb;
  explicit ConvData(const nn::ConvShape &s) {
    Rng r(1);
    auto fill = [&](std::vector<float> &v, std::size_t n) {
      v.resize(n);
      for (auto &e : v) {
        e = static_cast<float>(r.normal());
      }
    };
    fill(x, s.cin * s.voxels());
    fill(w, s.cout * s.cin * s.taps());
    fill(b, s.cout);
    fill(gy, s.cout * s.voxels());
    y.resize(gy.size());
    gx.resize(x.size());
    gw.resize(w.size());
    gb.resize(b.size());
  }
};

void BM_conv_forward(benchmark::State &st) {
  const auto s = conv_shape();
  ConvData d(s);
  for (auto _ : st) {
    nn::conv3d_forward(s, d.x.data(), d.w.data(), d.b.data(), d.y.data());
    benchmark::DoNotOptimize(d.y.data());
  }
}

void BM_conv_forward_reference(benchmark::State &st) {
  const auto s = conv_shape();
  ConvData d(s);
  for (auto _ : st) {
    nn::reference::conv3d_forward(s, d.x.data(), d.w.data(), d.b.data(), d.y.data());
    benchmark::DoNotOptimize(d.y.data());
  }
}

void BM_conv_backward(benchmark::State &st) {
  const auto s = conv_shape();
  ConvData d(s);
  for (auto _ : st) {
    nn::conv3d_backward(s, d.x.data(), d.w.data(), d.gy.data(), d.gx.data(), d.gw.data(), d.gb.data());
    benchmark::DoNotOptimize(d.gw.data());
  }
}

void BM_conv_backward_reference(benchmark::State &st) {
  const auto s = conv_shape();
  ConvData d(s);
  for (auto _ : st) {
    nn::reference::conv3d_backward(s, d.x.data(), d.w.data(), d.gy.data(), d.gx.data(), d.gw.data(), d.gb.data());
    benchmark::DoNotOptimize(d.gw.data());
  }
}

struct SpreadData {
  Nufft op;
  std::vector<cdouble> samples, grid;
  SpreadData()
      : op(96, 96, spokes_from_angles(spoke_angles(TrajectorySpec{}, 0), 192)), samples(op.samples()),
        grid(op.grid_height() * op.grid_width()) {
    Rng r(2);
    for (auto &v : samples) {
      v = {r.normal(), r.normal()};
    }
  }
};

void BM_spread(benchmark::State &st) {
  SpreadData d;
  for (auto _ : st) {
    d.op.spread(d.samples, d.grid);
    benchmark::DoNotOptimize(d.grid.data());
  }
}

void BM_spread_serial(benchmark::State &st) {
  SpreadData d;
  for (auto _ : st) {
    d.op.spread_serial(d.samples, d.grid);
    benchmark::DoNotOptimize(d.grid.data());
  }
}

} // namespace

BENCHMARK(BM_conv_forward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_forward_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_backward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_backward_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spread)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_spread_serial)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

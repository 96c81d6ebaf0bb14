#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/kspace.hpp"
#include "reconlab/tensor.hpp"

namespace reconlab {

struct GraspConfig {
  double lambda = 0.025;
  std::size_t admm_iters = 50;
  double rho = 1.0;
  std::size_t cg_iters = 10;
  double cg_tol = 1e-6;
  // false: clamped boundary, T-1 differences and no wrap.
  bool circular = true;

  void validate() const;
};

void to_json(nlohmann::json &j, const GraspConfig &c);
void from_json(const nlohmann::json &j, GraspConfig &c);

// Complex T x H x W series.
struct ComplexCine {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<cdouble> data;

  ComplexCine() = default;
  ComplexCine(std::size_t t, std::size_t h, std::size_t w) : frames(t), height(h), width(w), data(t * h * w) {}
  std::size_t frame_size() const { return height * width; }
};

// d_t = x_{t+1} - x_t over frame_size-long frames. Circular: T outputs, the
// last wraps to frame 0. Clamped: T - 1 outputs.
std::vector<cdouble> temporal_diff(std::span<const cdouble> x, std::size_t frames, std::size_t frame_size,
                                   bool circular = true);
std::vector<cdouble> temporal_diff_adjoint(std::span<const cdouble> d, std::size_t frames, std::size_t frame_size,
                                           bool circular = true);

// Magnitude shrinkage: v * max(|v| - tau, 0) / |v|.
cdouble soft_threshold(cdouble v, double tau);
double soft_threshold(double v, double tau);

struct GraspIteration {
  std::size_t iter = 0;
  double fidelity = 0.0; // 0.5 ||Ax - y||^2
  double tv = 0.0;       // lambda ||Dx||_1
  double total = 0.0;
  double primal_residual = 0.0; // ||Dx - z||
};

struct GraspResult {
  Cine magnitude; // |x| normalized to [0, 1]
  ComplexCine x;  // in the solver's scaling
  std::vector<GraspIteration> trace;
  std::map<std::size_t, ComplexCine> snapshots;
  // Data were divided by this so the initializer peaks at 1.
  double data_scale = 1.0;
};

struct GraspOptions {
  // Absent with multi-coil data: estimated from the pooled k-space centre.
  const CoilMaps *coil_maps = nullptr;
  // Keep x after these ADMM iterations (0 = the initializer).
  std::vector<std::size_t> snapshot_iters;
  GriddingKernel kernel = GriddingKernel::kaiser_bessel();
};

// ADMM for 0.5 ||Ax - y||^2 + lambda ||D x||_1, A per frame = coil weighting,
// NUFFT onto that frame's spokes, scaled so diag(A^H A) ~ 1.
GraspResult grasp_reconstruct(const RadialKSpace &y, const GraspConfig &cfg, const GraspOptions &opts = {});

void write_grasp_trace(const std::filesystem::path &path, const std::vector<GraspIteration> &trace);

} // namespace reconlab

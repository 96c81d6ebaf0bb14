#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "reconlab/nufft.hpp"
#include "reconlab/tensor.hpp"
#include "reconlab/trajectory.hpp"

namespace reconlab {

// Radial samples for a whole cine, layout frames x coils x spokes x readout.
struct RadialKSpace {
  TrajectorySpec spec;
  std::size_t frames = 0;
  std::size_t coils = 1;
  // Image matrix the data was acquired for.
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<cfloat> samples;

  RadialKSpace() = default;
  RadialKSpace(const TrajectorySpec &spec, std::size_t frames, std::size_t coils, std::size_t height,
               std::size_t width);

  std::size_t per_coil() const { return spec.spokes_per_frame * spec.samples_per_spoke(); }
  std::span<cfloat> frame_coil(std::size_t f, std::size_t c) {
    return {samples.data() + (f * coils + c) * per_coil(), per_coil()};
  }
  std::span<const cfloat> frame_coil(std::size_t f, std::size_t c) const {
    return {samples.data() + (f * coils + c) * per_coil(), per_coil()};
  }
};

// RCT1 complex tensor plus a JSON sidecar (<path>.json) carrying the trajectory.
void save_kspace(const std::filesystem::path &path, const RadialKSpace &k);
RadialKSpace load_kspace(const std::filesystem::path &path);

// Complex coil sensitivities, layout coils x H x W.
struct CoilMaps {
  std::size_t coils = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<cdouble> maps;

  std::span<const cdouble> coil(std::size_t c) const {
    return {maps.data() + c * height * width, height * width};
  }
};

// Gaussian lobes centred on an ncoils-gon around the field of view,
// normalized so the root-sum-of-squares is 1 at every pixel.
CoilMaps synthetic_coil_maps(std::size_t height, std::size_t width, std::size_t ncoils);

std::vector<ComplexFrame> simulate_coils(const ComplexFrame &frame, const CoilMaps &maps);
std::vector<ComplexFrame> simulate_coils(const ComplexFrame &frame, std::size_t ncoils);
// Root-sum-of-squares magnitude.
std::vector<float> combine_coils(std::span<const ComplexFrame> coil_frames);

// Self-calibrated maps: Hann low-pass of each coil image inside |k| <= radius,
// divided by the RSS of the low-passed images.
CoilMaps estimate_coil_maps(std::span<const ComplexFrame> coil_images, double radius = 0.05);
// Same, from the k-space centre of radial data pooled over all frames.
CoilMaps estimate_coil_maps(const RadialKSpace &kspace, double radius = 0.05,
                            GriddingKernel kernel = GriddingKernel::kaiser_bessel());

struct CorruptOptions {
  std::size_t ncoils = 1;
  GriddingKernel kernel = GriddingKernel::kaiser_bessel();
};

struct Corrupted {
  Cine aliased;
  RadialKSpace kspace;
};

// Per frame: degrid on the frame's spokes, density-compensated adjoint per coil,
// RSS combination, magnitude.
Corrupted corrupt_cine(const Cine &cine, const TrajectorySpec &spec, const CorruptOptions &opts = {});

// Density-compensated gridding reconstruction of stored radial data.
Cine regrid_cine(const RadialKSpace &kspace, GriddingKernel kernel = GriddingKernel::kaiser_bessel());

} // namespace reconlab

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/kspace.hpp"
#include "reconlab/phantom.hpp"
#include "reconlab/tensor.hpp"
#include "reconlab/trajectory.hpp"

namespace reconlab {

inline constexpr double kRealtimeFrameMs = 36.4;

struct CropShift {
  int dy = 0;
  int dx = 0;
  friend bool operator==(const CropShift &, const CropShift &) = default;
};

struct DatasetConfig {
  std::size_t n_train = 32;
  std::size_t n_test = 8;
  std::size_t matrix = 192; // resampled in-plane size, also the radial readout length
  std::size_t crop = 128;
  std::size_t frames = 20;
  double frame_dt_ms = kRealtimeFrameMs;
  std::size_t ncoils = 1;
  // 2x readout sampling; without it the fully sampled round trip aliases.
  bool readout_oversampling = true;
  bool store_kspace = true;
  PhantomRanges phantom;

  void validate() const;
};

void to_json(nlohmann::json &j, const DatasetConfig &c);
void from_json(const nlohmann::json &j, DatasetConfig &c);

// Bilinear resample to matrix x matrix, then cyclic linear resample in time
// onto frame_dt_ms steps; frame count = floor(rr_ms / frame_dt_ms).
Cine resample_pipeline(const Cine &src, double rr_ms, std::size_t matrix = 192,
                       double frame_dt_ms = kRealtimeFrameMs);
Cine crop_center(const Cine &cine, std::size_t size = 128, CropShift shift = {});
// Linear interpolation on normalized time; endpoints preserved exactly.
Cine interp_frames(const Cine &cine, std::size_t target_frames = 20);
// crop_center -> interp_frames -> normalize01, applied to any native-grid cine.
Cine to_network_grid(const Cine &native, const DatasetConfig &cfg, CropShift shift = {});

enum class SnrConvention { Amplitude, Power };
// White Gaussian noise with sigma set so the requested SNR (dB, whole cine)
// holds: 20 log10(rms / sigma) for Amplitude, 10 log10(rms / sigma) for Power.
// The result is clamped at zero and not renormalized.
Cine add_noise_to_snr(const Cine &cine, double snr_db, std::uint64_t seed,
                      SnrConvention convention = SnrConvention::Amplitude);

struct PairedSample {
  std::size_t index = 0;
  Cine truth;
  Cine aliased;
  TrajectorySpec spec;
  PhantomSpec phantom;
  CropShift shift;
  std::size_t native_frames = 0;
  // Radial data at native resolution, kept for iterative reconstruction.
  std::optional<RadialKSpace> kspace;
};

// Stage names appended in execution order, used to check pipeline ordering.
using PipelineTrace = std::vector<std::string>;

// Phantom and its corruption on the native grid, before crop / frame interpolation.
struct NativeSample {
  PhantomSpec phantom;
  TrajectorySpec spec;
  Cine truth;
  Cine aliased;
  RadialKSpace kspace;
};

NativeSample build_native(std::size_t index, const TrajectorySpec &traj, std::uint64_t seed,
                          const DatasetConfig &cfg, PipelineTrace *trace = nullptr);

// Full paired-sample pipeline for one sample index.
PairedSample build_sample(std::size_t index, const TrajectorySpec &traj, std::uint64_t seed,
                          const DatasetConfig &cfg, CropShift shift = {}, PipelineTrace *trace = nullptr);

// Samples 0..n-1, generated in parallel; each depends only on (seed, index).
std::vector<PairedSample> build_dataset(std::size_t n_samples, const TrajectorySpec &traj, std::uint64_t seed,
                                        const DatasetConfig &cfg, std::size_t first_index = 0);

// sample_%05d/{truth.rct, aliased.rct, meta.json[, kspace.rct, kspace.rct.json]}
std::filesystem::path sample_dir(const std::filesystem::path &root, std::size_t index);
void save_sample(const std::filesystem::path &root, const PairedSample &s, const std::string &split);
PairedSample load_sample(const std::filesystem::path &dir, bool with_kspace = false);
// Loads every sample in `root` whose meta split matches ("" for all), ordered by index.
std::vector<PairedSample> load_dataset(const std::filesystem::path &root, const std::string &split = "",
                                       bool with_kspace = false);

} // namespace reconlab

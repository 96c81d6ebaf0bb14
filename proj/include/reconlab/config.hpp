#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reconlab/datagen.hpp"
#include "reconlab/grasp.hpp"
#include "reconlab/metrics.hpp"
#include "reconlab/nn/train.hpp"
#include "reconlab/nn/unet.hpp"
#include "reconlab/trajectory.hpp"

namespace reconlab {

struct MetricsConfig {
  SsimParams ssim;
  std::size_t profile_length = 15;
};

struct SweepsConfig {
  std::vector<double> snr_db{20.0, 17.0, 15.2, 14.0, 13.0, 12.2, 11.5, 11.0, 10.5, 10.0};
  std::vector<double> accel{10, 11, 12, 13, 14, 15, 16};
  std::vector<int> crop_offsets{-12, -8, -4, 0, 4, 8, 12};
  SnrConvention snr_convention = SnrConvention::Amplitude;
  std::size_t max_samples = 0; // 0 = the whole test split
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "runs/default";
  DatasetConfig dataset;
  std::vector<Pattern> patterns{Pattern::TgaRot}; // dataset.patterns
  TrajectorySpec trajectory;                      // pattern = the one train / recon / sweep use
  nn::UNetConfig unet;
  nn::TrainConfig train;
  GraspConfig grasp;
  MetricsConfig metrics;
  SweepsConfig sweeps;

  // Trajectory for `pattern` with the dataset's readout settings applied.
  TrajectorySpec trajectory_for(Pattern pattern) const;
  void validate() const;
};

// Fully defaulted canonical JSON.
nlohmann::json to_json(const ExperimentConfig &cfg);
// Rejects unknown keys and wrongly typed values, naming the offending path.
ExperimentConfig parse_config(const nlohmann::json &raw);

// "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json &raw, const std::string &assignment);

struct LoadOptions {
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed; // e.g. from RECONLAB_SEED
};

ExperimentConfig load_config(const std::filesystem::path &path, const LoadOptions &opts = {});

// FNV-1a of the canonical JSON without output_dir.
std::uint64_t config_hash(const ExperimentConfig &cfg);
std::string hex64(std::uint64_t v);

} // namespace reconlab

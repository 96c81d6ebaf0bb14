#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "reconlab/config.hpp"
#include "reconlab/metrics.hpp"

namespace reconlab {

inline constexpr const char *kToolVersion = "0.1.0";

// Which network a checkpoint holds.
struct ModelSpec {
  Pattern pattern = Pattern::TgaRot;
  nn::NetMode mode = nn::NetMode::Spatiotemporal;
  nn::LossKind loss = nn::LossKind::L2;
};

// e.g. TGA_ROT, TGA_ROT_2d, TGA_ROT_l1
std::string model_tag(const ModelSpec &m);

std::filesystem::path dataset_root(const ExperimentConfig &cfg, Pattern p);
std::filesystem::path model_dir(const ExperimentConfig &cfg, const ModelSpec &m);
std::filesystem::path checkpoint_path(const ExperimentConfig &cfg, const ModelSpec &m);

// Manifest recorder: collects produced files, written atomically at the end.
class RunManifest {
public:
  RunManifest(const ExperimentConfig &cfg, std::string command);
  void add(const std::filesystem::path &file);
  void add_tree(const std::filesystem::path &dir);
  std::filesystem::path write(const std::string &suffix = "");

private:
  const ExperimentConfig &cfg_;
  std::string command_;
  std::string started_;
  std::vector<std::string> files_;
};

// Train / test split of stored samples: indices below n_train train.
std::string split_of(const DatasetConfig &cfg, std::size_t index);

// One dataset per configured pattern; returns the dataset roots.
std::vector<std::filesystem::path> cmd_make_dataset(const ExperimentConfig &cfg);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::vector<double> loss_history;
};

TrainOutcome cmd_train(const ExperimentConfig &cfg, const ModelSpec &model);

enum class ReconMethod { Grid, Grasp, UNet };
ReconMethod parse_method(const std::string &name);
std::string method_name(ReconMethod m);

struct ReconOptions {
  std::vector<ReconMethod> methods{ReconMethod::Grid, ReconMethod::Grasp, ReconMethod::UNet};
  ModelSpec model;
  bool png = false;
  std::size_t max_samples = 0; // 0 = all test samples
};

// Consolidated report for every method on the pattern's test split.
MetricReport cmd_recon(const ExperimentConfig &cfg, const ReconOptions &opts);

// One summary row per pattern (unet rows of the report).
MetricReport cmd_compare_patterns(const ExperimentConfig &cfg, nn::NetMode mode = nn::NetMode::Spatiotemporal,
                                  nn::LossKind loss = nn::LossKind::L2);

enum class SweepAxis { Snr, Accel, Crop };
SweepAxis parse_axis(const std::string &name);
std::string axis_name(SweepAxis a);

MetricReport cmd_sweep(const ExperimentConfig &cfg, SweepAxis axis, const ModelSpec &model);

std::vector<std::filesystem::path> cmd_export_frames(const std::filesystem::path &cine,
                                                     const std::filesystem::path &out_dir, long row = -1);

// Helpers shared with the acceptance suite.
nn::UNetConfig net_config(const ExperimentConfig &cfg, nn::NetMode mode);
nn::TrainConfig train_config(const ExperimentConfig &cfg, nn::LossKind loss);
std::vector<std::size_t> test_indices(const ExperimentConfig &cfg);
MetricRow evaluate(const Cine &output, const Cine &truth, const PhantomSpec &phantom, CropShift shift,
                   const ExperimentConfig &cfg);

} // namespace reconlab

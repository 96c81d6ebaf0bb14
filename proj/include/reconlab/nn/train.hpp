#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/nn/unet.hpp"

namespace reconlab::nn {

enum class LossKind { L2, L1 };

struct LossResult {
  double value = 0.0;
  std::vector<float> grad; // d loss / d pred
};

// L2 = mean squared error, L1 = mean absolute error (subgradient 0 at ties).
LossResult loss(std::span<const float> pred, std::span<const float> truth, LossKind kind);

struct TrainConfig {
  std::size_t epochs = 350;
  std::size_t batch = 8;
  double lr = 1e-3;
  LossKind loss = LossKind::L2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0; // 0 = never

  void validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
void from_json(const nlohmann::json &j, TrainConfig &c);

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step = 0;
};

AdamState adam_init(const UNetParams &params);

// One bias-corrected update; grads must be finite.
void adam_step(UNetParams &params, const Gradients &grads, AdamState &state, const TrainConfig &cfg);

struct TrainPair {
  const Cine *input = nullptr;
  const Cine *target = nullptr;
};

struct TrainResult {
  UNetParams params;
  std::vector<double> loss_history; // mean sample loss per epoch
};

using CheckpointFn = std::function<void(std::size_t epoch, const UNetParams &)>;

// Loss and accumulated (not averaged) gradient for one pair.
double sample_gradient(const UNetParams &params, const TrainPair &pair, LossKind kind, Gradients &grads);

TrainResult train(const std::vector<TrainPair> &data, const UNetConfig &net, const TrainConfig &cfg,
                  const CheckpointFn &on_checkpoint = {});

// Magic "RLCKPT1\0", u64 LE header length, JSON header, then one RCT1
// tensor per parameter in header order.
void save_checkpoint(const std::filesystem::path &path, const UNetParams &params,
                     const nlohmann::json &extra);
void save_checkpoint(const std::filesystem::path &path, const UNetParams &params);
UNetParams load_checkpoint(const std::filesystem::path &path, nlohmann::json *header = nullptr);

void write_loss_history(const std::filesystem::path &path, const std::vector<double> &history);
std::vector<double> read_loss_history(const std::filesystem::path &path);

} // namespace reconlab::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/tensor.hpp"

namespace reconlab::nn {

enum class NetMode {
  Spatiotemporal, // 3x3x3 kernels
  PerFrame,       // 1x3x3 kernels, no temporal pooling: a 2D net applied frame by frame
};

struct UNetConfig {
  std::size_t levels = 3;
  std::size_t base_channels = 32; // doubled per level
  std::size_t convs_per_level = 2;
  std::size_t frames = 20;  // input T; fixes where time can be pooled
  bool temporal_pool = true;
  NetMode mode = NetMode::Spatiotemporal;

  void validate() const;
  std::size_t channels(std::size_t level) const { return base_channels << level; }
  std::size_t kernel_t() const { return mode == NetMode::PerFrame ? 1 : 3; }
  // Temporal pooling factor applied after encoder level `level` (1 or 2).
  std::size_t pool_t(std::size_t level) const;
  // Frames seen at `level`.
  std::size_t frames_at(std::size_t level) const;
};

void to_json(nlohmann::json &j, const UNetConfig &c);
void from_json(const nlohmann::json &j, UNetConfig &c);

// Closed-form trainable parameter count.
std::size_t parameter_count(const UNetConfig &cfg);

struct UNetParams {
  UNetConfig config;
  std::vector<std::string> names;
  std::vector<Tensor<float>> tensors;
  // Changes whenever the values change; tapes remember it.
  std::uint64_t version = 0;

  std::size_t count() const;
  bool finite() const;
  void touch();
};

// He-uniform weights, zero biases, zero-initialised final residual layer.
UNetParams init_params(const UNetConfig &cfg, std::uint64_t seed);

// Gradients in the same order and shapes as UNetParams::tensors.
using Gradients = std::vector<Tensor<float>>;
Gradients zero_gradients(const UNetParams &params);

struct Tape {
  std::uint64_t version = 0;
  std::size_t t = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<std::vector<float>> buffers;
  std::vector<std::vector<std::uint32_t>> argmax;
  bool recorded = false;
};

// Input 1 x T x H x W as a cine; output = ReLU(input + residual(input)).
Cine unet_forward(const UNetParams &params, const Cine &input, Tape *tape = nullptr);

// Reverse pass from dLoss/dOutput. Adds into `grads`.
void unet_backward(const UNetParams &params, const Tape &tape, std::span<const float> grad_out, Gradients &grads);

// Per-frame application of a PerFrame-mode net.
std::vector<float> unet_forward_2d(const UNetParams &params, std::span<const float> frame, std::size_t height,
                                   std::size_t width);

} // namespace reconlab::nn

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/datagen.hpp"
#include "reconlab/tensor.hpp"

namespace reconlab {

double rmse(const Cine &a, const Cine &b);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

// Gaussian-window SSIM over the 'valid' region of one frame.
double ssim_frame(std::span<const float> a, std::span<const float> b, std::size_t height, std::size_t width,
                  const SsimParams &p = {});
// Mean over frames of ssim_frame.
double ssim(const Cine &a, const Cine &b, const SsimParams &p = {});

// Straight segment in pixel coordinates (row, column), sampled bilinearly.
struct LineProfile {
  double y0 = 0.0;
  double x0 = 0.0;
  double y1 = 0.0;
  double x1 = 0.0;
  std::size_t samples = 15;
};

std::vector<double> sample_profile(std::span<const float> frame, std::size_t height, std::size_t width,
                                   const LineProfile &line);
// Min-max normalize, degree-10 least-squares fit over arclength [0, 1],
// max |d/ds| of the fit. Throws on a constant profile.
double profile_sharpness(std::span<const double> values, std::size_t degree = 10);
double edge_sharpness(std::span<const float> frame, std::size_t height, std::size_t width, const LineProfile &line);
// Mean over profiles and frames; frames whose profile is flat are skipped.
double edge_sharpness(const Cine &cine, std::span<const LineProfile> lines);

// Six radii across the mean endocardial border of a phantom, in the
// coordinates of the cropped network grid.
std::vector<LineProfile> phantom_edge_profiles(const PhantomSpec &spec, const DatasetConfig &cfg, CropShift shift,
                                               std::size_t length = 15);

struct BlandAltman {
  double bias = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
};

// d = test - ref; bias +- 2 sample standard deviations.
BlandAltman bland_altman(std::span<const double> ref, std::span<const double> test);

// Mean squared second temporal difference over interior frames.
double flicker_metric(const Cine &cine);

template <typename F>
auto timed(F &&f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto result = std::forward<F>(f)();
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return std::pair{std::move(result), dt};
}

struct TimingStats {
  double min_s = 0.0;
  double median_s = 0.0;
  std::vector<double> runs;
};

template <typename F>
TimingStats repeat_timing(F &&f, std::size_t repeats = 5) {
  TimingStats s;
  for (std::size_t i = 0; i < repeats; ++i) {
    s.runs.push_back(timed([&] {
                       f();
                       return 0;
                     }).second);
  }
  std::vector<double> sorted = s.runs;
  std::sort(sorted.begin(), sorted.end());
  s.min_s = sorted.front();
  const std::size_t n = sorted.size();
  s.median_s = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

struct MetricRow {
  std::string method;
  std::string pattern;
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::size_t sample = 0;
  double rmse = 0.0;
  double ssim = 0.0;
  double edge_sharpness = 0.0;
  double wall_time_s = 0.0;
};

struct MetricSummary {
  std::string method;
  std::string pattern;
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::size_t n = 0;
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;
  double ssim_mean = 0.0;
  double ssim_sd = 0.0;
  double edge_sharpness_mean = 0.0;
  double wall_time_mean_s = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;

  void add(MetricRow row);
  // Grouped by (method, pattern, sweep_axis, sweep_value) in first-seen order.
  std::vector<MetricSummary> summarize() const;
  void write_csv(const std::filesystem::path &path) const;
  nlohmann::json summary_json() const;
};

} // namespace reconlab

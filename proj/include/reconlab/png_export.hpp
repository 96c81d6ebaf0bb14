#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "reconlab/tensor.hpp"

namespace reconlab {

// 8-bit grayscale, value v in [0, 1] -> round(255 v), clamped.
void write_png_gray(const std::filesystem::path &path, std::span<const float> pixels, std::size_t height,
                    std::size_t width);

// Decoded 8-bit grayscale image, for checking exports.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<unsigned char> pixels;
};
GrayImage read_png_gray(const std::filesystem::path &path);

// Row `row` of every frame stacked over time: T x W.
std::vector<float> xt_profile(const Cine &cine, std::size_t row);

// frame_%03d.png for each frame plus xt_row%03d.png. Returns the written paths.
std::vector<std::filesystem::path> export_frames(const Cine &cine, const std::filesystem::path &dir,
                                                 std::size_t row);

} // namespace reconlab

#include "reconlab/png_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace reconlab {

namespace {

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void write_png_gray(const std::filesystem::path &path, std::span<const float> pixels, std::size_t height,
                    std::size_t width) {
  if (pixels.size() != height * width || height == 0 || width == 0) {
    throw ShapeError("png: pixel count does not match the image size");
  }
  std::vector<unsigned char> bytes(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const float v = std::isfinite(pixels[i]) ? std::clamp(pixels[i], 0.0f, 1.0f) : 0.0f;
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) {
    throw IoError("cannot write " + path.string());
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png, bytes.data() + y * width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage read_png_gray(const std::filesystem::path &path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) {
    throw MissingArtifact("cannot open " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("not a readable PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("expected 8-bit grayscale PNG: " + path.string());
  }
  GrayImage img;
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.pixels.resize(img.width * img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    png_read_row(png, img.pixels.data() + y * img.width, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<float> xt_profile(const Cine &cine, std::size_t row) {
  if (row >= cine.height()) {
    throw ShapeError("x-t row outside the image");
  }
  std::vector<float> out(cine.frames() * cine.width());
  for (std::size_t t = 0; t < cine.frames(); ++t) {
    for (std::size_t x = 0; x < cine.width(); ++x) {
      out[t * cine.width() + x] = cine.at(t, row, x);
    }
  }
  return out;
}

std::vector<std::filesystem::path> export_frames(const Cine &cine, const std::filesystem::path &dir,
                                                 std::size_t row) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  char name[40];
  for (std::size_t t = 0; t < cine.frames(); ++t) {
    std::snprintf(name, sizeof name, "frame_%03zu.png", t);
    write_png_gray(dir / name, cine.frame(t), cine.height(), cine.width());
    written.push_back(dir / name);
  }
  std::snprintf(name, sizeof name, "xt_row%03zu.png", row);
  write_png_gray(dir / name, xt_profile(cine, row), cine.frames(), cine.width());
  written.push_back(dir / name);
  return written;
}

} // namespace reconlab

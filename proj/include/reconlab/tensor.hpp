#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reconlab/errors.hpp"

namespace reconlab {

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Dense row-major tensor, last index fastest.
template <typename T>
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw ShapeError("tensor data size does not match shape");
    }
  }

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T *data() { return data_.data(); }
  const T *data() const { return data_.data(); }
  std::vector<T> &storage() { return data_; }
  const std::vector<T> &storage() const { return data_; }

  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const Tensor &, const Tensor &) = default;

  static std::size_t count(const std::vector<std::size_t> &shape) {
    std::size_t n = 1;
    for (auto d : shape) {
      n *= d;
    }
    return n;
  }

private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

// Real-valued 2D+time image series, layout frames x height x width.
class Cine {
public:
  Cine() = default;
  Cine(std::size_t frames, std::size_t height, std::size_t width, double frame_dt_ms = 0.0)
      : frames_(frames), height_(height), width_(width), frame_dt_ms_(frame_dt_ms),
        data_(frames * height * width, 0.0f) {}

  std::size_t frames() const { return frames_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t frame_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  double frame_dt_ms() const { return frame_dt_ms_; }
  void set_frame_dt_ms(double dt) { frame_dt_ms_ = dt; }

  float &at(std::size_t t, std::size_t y, std::size_t x) {
    return data_[(t * height_ + y) * width_ + x];
  }
  float at(std::size_t t, std::size_t y, std::size_t x) const {
    return data_[(t * height_ + y) * width_ + x];
  }

  std::span<float> frame(std::size_t t) { return {data_.data() + t * frame_size(), frame_size()}; }
  std::span<const float> frame(std::size_t t) const {
    return {data_.data() + t * frame_size(), frame_size()};
  }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool same_shape(const Cine &o) const {
    return frames_ == o.frames_ && height_ == o.height_ && width_ == o.width_;
  }

  Tensor<float> to_tensor() const { return Tensor<float>({frames_, height_, width_}, data_); }
  static Cine from_tensor(const Tensor<float> &t, double frame_dt_ms = 0.0);

  friend bool operator==(const Cine &a, const Cine &b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

private:
  std::size_t frames_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  double frame_dt_ms_ = 0.0;
  std::vector<float> data_;
};

// Complex H x W frame used for Fourier-domain work; kept in double.
struct ComplexFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<cdouble> data;

  ComplexFrame() = default;
  ComplexFrame(std::size_t h, std::size_t w) : height(h), width(w), data(h * w) {}

  cdouble &at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  cdouble at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
};

ComplexFrame to_complex(std::span<const float> frame, std::size_t height, std::size_t width);

// (x - min) / (max - min) over the whole cine; a constant cine maps to zeros.
Cine normalize01(const Cine &cine);

} // namespace reconlab

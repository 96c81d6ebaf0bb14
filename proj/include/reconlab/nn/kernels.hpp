#pragma once

#include <cstddef>
#include <cstdint>

namespace reconlab::nn {

// "Same" 3D cross-correlation: input cin x T x H x W, kernel
// cout x cin x kt x kh x kw (odd sizes), zero padding k/2 on every axis.
struct ConvShape {
  std::size_t cin = 1;
  std::size_t cout = 1;
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t kt = 3;
  std::size_t kh = 3;
  std::size_t kw = 3;

  std::size_t taps() const { return kt * kh * kw; }
  std::size_t voxels() const { return t * h * w; }
};

// Non-overlapping window pooling / stride-equal transposed convolution.
// Input of the pool is c x T x H x W with T % pt == H % ph == W % pw == 0.
struct PoolShape {
  std::size_t c = 1;
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t pt = 2;
  std::size_t ph = 2;
  std::size_t pw = 2;

  std::size_t out_voxels() const { return (t / pt) * (h / ph) * (w / pw); }
  std::size_t window() const { return pt * ph * pw; }
};

// Transposed convolution with kernel == stride: input cin x t x h x w,
// output cout x (t*pt) x (h*ph) x (w*pw), kernel cin x cout x pt x ph x pw.
struct UpShape {
  std::size_t cin = 1;
  std::size_t cout = 1;
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t pt = 2;
  std::size_t ph = 2;
  std::size_t pw = 2;

  std::size_t in_voxels() const { return t * h * w; }
  std::size_t window() const { return pt * ph * pw; }
};

// OpenMP kernels. The convolution runs as per-frame im2col + GEMM; every
// reduction is summed in a fixed order so results do not depend on the
// thread count.
template <typename T>
void conv3d_forward(const ConvShape &s, const T *x, const T *weight, const T *bias, T *y);
// grad_x may be null. grad_weight / grad_bias are overwritten.
template <typename T>
void conv3d_backward(const ConvShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                     T *grad_weight, T *grad_bias);

template <typename T>
void maxpool3d_forward(const PoolShape &s, const T *x, T *y, std::uint32_t *argmax);
template <typename T>
void maxpool3d_backward(const PoolShape &s, const T *grad_y, const std::uint32_t *argmax, T *grad_x);

template <typename T>
void upconv3d_forward(const UpShape &s, const T *x, const T *weight, const T *bias, T *y);
template <typename T>
void upconv3d_backward(const UpShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                       T *grad_weight, T *grad_bias);

template <typename T>
void relu_forward(std::size_t n, const T *x, T *y);
// Gradient through ReLU given its output.
template <typename T>
void relu_backward(std::size_t n, const T *y, const T *grad_y, T *grad_x);

// Serial direct-loop versions kept as the test oracle for the kernels above.
namespace reference {

template <typename T>
void conv3d_forward(const ConvShape &s, const T *x, const T *weight, const T *bias, T *y);
template <typename T>
void conv3d_backward(const ConvShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                     T *grad_weight, T *grad_bias);
template <typename T>
void maxpool3d_forward(const PoolShape &s, const T *x, T *y, std::uint32_t *argmax);
template <typename T>
void upconv3d_forward(const UpShape &s, const T *x, const T *weight, const T *bias, T *y);
template <typename T>
void upconv3d_backward(const UpShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                       T *grad_weight, T *grad_bias);

} // namespace reference

} // namespace reconlab::nn

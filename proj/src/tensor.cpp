#include "reconlab/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace reconlab {

Cine Cine::from_tensor(const Tensor<float> &t, double frame_dt_ms) {
  if (t.ndim() != 3) {
    throw ShapeError("cine tensor must have 3 dimensions (T x H x W)");
  }
  Cine c(t.dim(0), t.dim(1), t.dim(2), frame_dt_ms);
  std::copy(t.values().begin(), t.values().end(), c.values().begin());
  return c;
}

ComplexFrame to_complex(std::span<const float> frame, std::size_t height, std::size_t width) {
  if (frame.size() != height * width) {
    throw ShapeError("frame size does not match dimensions");
  }
  ComplexFrame out(height, width);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out.data[i] = frame[i];
  }
  return out;
}

Cine normalize01(const Cine &cine) {
  Cine out(cine.frames(), cine.height(), cine.width(), cine.frame_dt_ms());
  auto in = cine.values();
  if (in.empty()) {
    return out;
  }
  auto [lo_it, hi_it] = std::minmax_element(in.begin(), in.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    return out;
  }
  const double scale = 1.0 / (hi - lo);
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp((in[i] - lo) * scale, 0.0, 1.0));
  }
  return out;
}

} // namespace reconlab

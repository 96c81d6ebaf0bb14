#include "reconlab/nn/kernels.hpp"

#include <algorithm>
#include <vector>

#include <Eigen/Core>

namespace reconlab::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMat = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMat = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Column buffer for output frame t: rows (ci, a, b, c), columns output pixels.
template <typename T>
void im2col(const ConvShape &s, const T *x, std::size_t t, T *col) {
  const std::size_t hw = s.h * s.w;
  const auto pt = static_cast<long>(s.kt / 2);
  const auto ph = static_cast<long>(s.kh / 2);
  const auto pw = static_cast<long>(s.kw / 2);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < s.cin; ++ci) {
    for (std::size_t a = 0; a < s.kt; ++a) {
      const long st = static_cast<long>(t) + static_cast<long>(a) - pt;
      for (std::size_t b = 0; b < s.kh; ++b) {
        for (std::size_t c = 0; c < s.kw; ++c, ++row) {
          T *dst = col + row * hw;
          if (st < 0 || st >= static_cast<long>(s.t)) {
            std::fill(dst, dst + hw, T{});
            continue;
          }
          const T *plane = x + (ci * s.t + static_cast<std::size_t>(st)) * hw;
          const long dx = static_cast<long>(c) - pw;
          const long x_lo = std::max(0L, -dx);
          const long x_hi = std::min(static_cast<long>(s.w), static_cast<long>(s.w) - dx);
          for (std::size_t yy = 0; yy < s.h; ++yy) {
            const long sy = static_cast<long>(yy) + static_cast<long>(b) - ph;
            T *out = dst + yy * s.w;
            if (sy < 0 || sy >= static_cast<long>(s.h) || x_lo >= x_hi) {
              std::fill(out, out + s.w, T{});
              continue;
            }
            const T *src = plane + static_cast<std::size_t>(sy) * s.w;
            std::fill(out, out + x_lo, T{});
            std::copy(src + x_lo + dx, src + x_hi + dx, out + x_lo);
            std::fill(out + x_hi, out + s.w, T{});
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvShape &s, const T *col, std::size_t t, T *gx) {
  const std::size_t hw = s.h * s.w;
  const auto pt = static_cast<long>(s.kt / 2);
  const auto ph = static_cast<long>(s.kh / 2);
  const auto pw = static_cast<long>(s.kw / 2);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < s.cin; ++ci) {
    for (std::size_t a = 0; a < s.kt; ++a) {
      const long st = static_cast<long>(t) + static_cast<long>(a) - pt;
      for (std::size_t b = 0; b < s.kh; ++b) {
        for (std::size_t c = 0; c < s.kw; ++c, ++row) {
          if (st < 0 || st >= static_cast<long>(s.t)) {
            continue;
          }
          const T *src = col + row * hw;
          T *plane = gx + (ci * s.t + static_cast<std::size_t>(st)) * hw;
          const long dx = static_cast<long>(c) - pw;
          const long x_lo = std::max(0L, -dx);
          const long x_hi = std::min(static_cast<long>(s.w), static_cast<long>(s.w) - dx);
          for (std::size_t yy = 0; yy < s.h; ++yy) {
            const long sy = static_cast<long>(yy) + static_cast<long>(b) - ph;
            if (sy < 0 || sy >= static_cast<long>(s.h)) {
              continue;
            }
            const T *in = src + yy * s.w;
            T *out = plane + static_cast<std::size_t>(sy) * s.w;
            for (long xx = x_lo; xx < x_hi; ++xx) {
              out[xx + dx] += in[xx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void channel_sums(std::size_t channels, std::size_t per_channel, const T *g, T *out) {
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    const T *p = g + c * per_channel;
    for (std::size_t i = 0; i < per_channel; ++i) {
      acc += p[i];
    }
    out[c] = static_cast<T>(acc);
  }
}

} // namespace

template <typename T>
void conv3d_forward(const ConvShape &s, const T *x, const T *weight, const T *bias, T *y) {
  const std::size_t hw = s.h * s.w;
  const std::size_t k = s.cin * s.taps();
  const ConstMapMat<T> wm(weight, static_cast<Eigen::Index>(s.cout), static_cast<Eigen::Index>(k));
  const auto frames = static_cast<std::int64_t>(s.t);
#pragma omp parallel
  {
    std::vector<T> col(k * hw);
#pragma omp for schedule(static)
    for (std::int64_t ti = 0; ti < frames; ++ti) {
      const auto t = static_cast<std::size_t>(ti);
      im2col(s, x, t, col.data());
      const ConstMapMat<T> cm(col.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
      StridedMat<T> ym(y + t * hw, static_cast<Eigen::Index>(s.cout), static_cast<Eigen::Index>(hw),
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(s.t * hw)));
      ym.noalias() = wm * cm;
      if (bias != nullptr) {
        for (std::size_t co = 0; co < s.cout; ++co) {
          ym.row(static_cast<Eigen::Index>(co)).array() += bias[co];
        }
      }
    }
  }
}

template <typename T>
void conv3d_backward(const ConvShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                     T *grad_weight, T *grad_bias) {
  const std::size_t hw = s.h * s.w;
  const std::size_t k = s.cin * s.taps();
  const ConstMapMat<T> wm(weight, static_cast<Eigen::Index>(s.cout), static_cast<Eigen::Index>(k));
  const Eigen::OuterStride<> ystride(static_cast<Eigen::Index>(s.t * hw));

  if (grad_bias != nullptr) {
    channel_sums(s.cout, s.t * hw, grad_y, grad_bias);
  }
  if (grad_x != nullptr) {
    std::fill(grad_x, grad_x + s.cin * s.t * hw, T{});
  }
  // Per-frame weight-gradient partials, summed in frame order afterwards.
  std::vector<T> partial(grad_weight != nullptr ? s.t * s.cout * k : 0);

  // Frames within one phase are >= kt apart, so their col2im targets are disjoint.
  for (std::size_t phase = 0; phase < s.kt; ++phase) {
#pragma omp parallel
    {
      std::vector<T> col(k * hw);
      std::vector<T> gcol(grad_x != nullptr ? k * hw : 0);
#pragma omp for schedule(static)
      for (std::int64_t ti = static_cast<std::int64_t>(phase); ti < static_cast<std::int64_t>(s.t);
           ti += static_cast<std::int64_t>(s.kt)) {
        const auto t = static_cast<std::size_t>(ti);
        const ConstStridedMat<T> gy(grad_y + t * hw, static_cast<Eigen::Index>(s.cout),
                                    static_cast<Eigen::Index>(hw), ystride);
        if (grad_weight != nullptr) {
          im2col(s, x, t, col.data());
          const ConstMapMat<T> cm(col.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
          MapMat<T> pw(partial.data() + t * s.cout * k, static_cast<Eigen::Index>(s.cout),
                       static_cast<Eigen::Index>(k));
          pw.noalias() = gy * cm.transpose();
        }
        if (grad_x != nullptr) {
          MapMat<T> gc(gcol.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
          gc.noalias() = wm.transpose() * gy;
          col2im_add(s, gcol.data(), t, grad_x);
        }
      }
    }
  }
  if (grad_weight != nullptr) {
    const std::size_t n = s.cout * k;
    std::fill(grad_weight, grad_weight + n, T{});
    for (std::size_t t = 0; t < s.t; ++t) {
      const T *p = partial.data() + t * n;
      for (std::size_t i = 0; i < n; ++i) {
        grad_weight[i] += p[i];
      }
    }
  }
}

template <typename T>
void maxpool3d_forward(const PoolShape &s, const T *x, T *y, std::uint32_t *argmax) {
  const std::size_t ot = s.t / s.pt;
  const std::size_t oh = s.h / s.ph;
  const std::size_t ow = s.w / s.pw;
  const auto planes = static_cast<std::int64_t>(s.c * ot);
#pragma omp parallel for schedule(static)
  for (std::int64_t pi = 0; pi < planes; ++pi) {
    const std::size_t c = static_cast<std::size_t>(pi) / ot;
    const std::size_t t = static_cast<std::size_t>(pi) % ot;
    for (std::size_t yy = 0; yy < oh; ++yy) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        std::size_t best = 0;
        bool first = true;
        T best_v{};
        for (std::size_t a = 0; a < s.pt; ++a) {
          for (std::size_t b = 0; b < s.ph; ++b) {
            for (std::size_t d = 0; d < s.pw; ++d) {
              const std::size_t idx =
                  ((c * s.t + t * s.pt + a) * s.h + yy * s.ph + b) * s.w + xx * s.pw + d;
              if (first || x[idx] > best_v) {
                best_v = x[idx];
                best = idx;
                first = false;
              }
            }
          }
        }
        const std::size_t o = ((c * ot + t) * oh + yy) * ow + xx;
        y[o] = best_v;
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

template <typename T>
void maxpool3d_backward(const PoolShape &s, const T *grad_y, const std::uint32_t *argmax, T *grad_x) {
  std::fill(grad_x, grad_x + s.c * s.t * s.h * s.w, T{});
  const auto n = static_cast<std::int64_t>(s.c * s.out_voxels());
  // Windows do not overlap, so each input receives at most one gradient.
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    grad_x[argmax[i]] += grad_y[i];
  }
}

namespace {

// Rows (tap, co) of the transposed-convolution weight as a (window*cout) x cin matrix.
template <typename T>
RowMat<T> tap_major_weight(const UpShape &s, const T *weight) {
  const std::size_t win = s.window();
  RowMat<T> wt(static_cast<Eigen::Index>(win * s.cout), static_cast<Eigen::Index>(s.cin));
  for (std::size_t ci = 0; ci < s.cin; ++ci) {
    for (std::size_t co = 0; co < s.cout; ++co) {
      for (std::size_t tap = 0; tap < win; ++tap) {
        wt(static_cast<Eigen::Index>(tap * s.cout + co), static_cast<Eigen::Index>(ci)) =
            weight[(ci * s.cout + co) * win + tap];
      }
    }
  }
  return wt;
}

template <typename T, typename Fn>
void for_each_up_position(const UpShape &s, Fn &&fn) {
  const std::size_t oh = s.h * s.ph;
  const std::size_t ow = s.w * s.pw;
  const std::size_t ot = s.t * s.pt;
  for (std::size_t a = 0; a < s.pt; ++a) {
    for (std::size_t b = 0; b < s.ph; ++b) {
      for (std::size_t d = 0; d < s.pw; ++d) {
        const std::size_t tap = (a * s.ph + b) * s.pw + d;
        for (std::size_t t = 0; t < s.t; ++t) {
          for (std::size_t yy = 0; yy < s.h; ++yy) {
            for (std::size_t xx = 0; xx < s.w; ++xx) {
              const std::size_t n = (t * s.h + yy) * s.w + xx;
              const std::size_t out = ((t * s.pt + a) * oh + yy * s.ph + b) * ow + xx * s.pw + d;
              fn(tap, n, out, ot * oh * ow);
            }
          }
        }
      }
    }
  }
}

} // namespace

template <typename T>
void upconv3d_forward(const UpShape &s, const T *x, const T *weight, const T *bias, T *y) {
  const std::size_t n = s.in_voxels();
  const RowMat<T> wt = tap_major_weight(s, weight);
  const ConstMapMat<T> xm(x, static_cast<Eigen::Index>(s.cin), static_cast<Eigen::Index>(n));
  const RowMat<T> z = wt * xm;
  for_each_up_position<T>(s, [&](std::size_t tap, std::size_t i, std::size_t out, std::size_t out_per_c) {
    for (std::size_t co = 0; co < s.cout; ++co) {
      y[co * out_per_c + out] =
          z(static_cast<Eigen::Index>(tap * s.cout + co), static_cast<Eigen::Index>(i)) + (bias ? bias[co] : T{});
    }
  });
}

template <typename T>
void upconv3d_backward(const UpShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                       T *grad_weight, T *grad_bias) {
  const std::size_t n = s.in_voxels();
  const std::size_t win = s.window();
  if (grad_bias != nullptr) {
    channel_sums(s.cout, n * win, grad_y, grad_bias);
  }
  RowMat<T> g(static_cast<Eigen::Index>(win * s.cout), static_cast<Eigen::Index>(n));
  for_each_up_position<T>(s, [&](std::size_t tap, std::size_t i, std::size_t out, std::size_t out_per_c) {
    for (std::size_t co = 0; co < s.cout; ++co) {
      g(static_cast<Eigen::Index>(tap * s.cout + co), static_cast<Eigen::Index>(i)) = grad_y[co * out_per_c + out];
    }
  });
  if (grad_x != nullptr) {
    const RowMat<T> wt = tap_major_weight(s, weight);
    MapMat<T> gx(grad_x, static_cast<Eigen::Index>(s.cin), static_cast<Eigen::Index>(n));
    gx.noalias() = wt.transpose() * g;
  }
  if (grad_weight != nullptr) {
    const ConstMapMat<T> xm(x, static_cast<Eigen::Index>(s.cin), static_cast<Eigen::Index>(n));
    const RowMat<T> gwt = g * xm.transpose();
    for (std::size_t ci = 0; ci < s.cin; ++ci) {
      for (std::size_t co = 0; co < s.cout; ++co) {
        for (std::size_t tap = 0; tap < win; ++tap) {
          grad_weight[(ci * s.cout + co) * win + tap] =
              gwt(static_cast<Eigen::Index>(tap * s.cout + co), static_cast<Eigen::Index>(ci));
        }
      }
    }
  }
}

template <typename T>
void relu_forward(std::size_t n, const T *x, T *y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    y[i] = x[i] > T{} ? x[i] : T{};
  }
}

template <typename T>
void relu_backward(std::size_t n, const T *y, const T *grad_y, T *grad_x) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    grad_x[i] = y[i] > T{} ? grad_y[i] : T{};
  }
}

namespace reference {

template <typename T>
void conv3d_forward(const ConvShape &s, const T *x, const T *weight, const T *bias, T *y) {
  const long pt = static_cast<long>(s.kt / 2), ph = static_cast<long>(s.kh / 2), pw = static_cast<long>(s.kw / 2);
  for (std::size_t co = 0; co < s.cout; ++co) {
    for (std::size_t t = 0; t < s.t; ++t) {
      for (std::size_t yy = 0; yy < s.h; ++yy) {
        for (std::size_t xx = 0; xx < s.w; ++xx) {
          double acc = bias ? static_cast<double>(bias[co]) : 0.0;
          for (std::size_t ci = 0; ci < s.cin; ++ci) {
            for (std::size_t a = 0; a < s.kt; ++a) {
              for (std::size_t b = 0; b < s.kh; ++b) {
                for (std::size_t c = 0; c < s.kw; ++c) {
                  const long st = static_cast<long>(t + a) - pt;
                  const long sy = static_cast<long>(yy + b) - ph;
                  const long sx = static_cast<long>(xx + c) - pw;
                  if (st < 0 || sy < 0 || sx < 0 || st >= static_cast<long>(s.t) ||
                      sy >= static_cast<long>(s.h) || sx >= static_cast<long>(s.w)) {
                    continue;
                  }
                  const std::size_t xi = ((ci * s.t + static_cast<std::size_t>(st)) * s.h + static_cast<std::size_t>(sy)) * s.w +
                                         static_cast<std::size_t>(sx);
                  const std::size_t wi = (((co * s.cin + ci) * s.kt + a) * s.kh + b) * s.kw + c;
                  acc += static_cast<double>(weight[wi]) * x[xi];
                }
              }
            }
          }
          y[((co * s.t + t) * s.h + yy) * s.w + xx] = static_cast<T>(acc);
        }
      }
    }
  }
}

template <typename T>
void conv3d_backward(const ConvShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                     T *grad_weight, T *grad_bias) {
  const long pt = static_cast<long>(s.kt / 2), ph = static_cast<long>(s.kh / 2), pw = static_cast<long>(s.kw / 2);
  const std::size_t nx = s.cin * s.voxels();
  const std::size_t nw = s.cout * s.cin * s.taps();
  std::vector<double> gx(nx, 0.0), gw(nw, 0.0), gb(s.cout, 0.0);
  for (std::size_t co = 0; co < s.cout; ++co) {
    for (std::size_t t = 0; t < s.t; ++t) {
      for (std::size_t yy = 0; yy < s.h; ++yy) {
        for (std::size_t xx = 0; xx < s.w; ++xx) {
          const double g = grad_y[((co * s.t + t) * s.h + yy) * s.w + xx];
          gb[co] += g;
          for (std::size_t ci = 0; ci < s.cin; ++ci) {
            for (std::size_t a = 0; a < s.kt; ++a) {
              for (std::size_t b = 0; b < s.kh; ++b) {
                for (std::size_t c = 0; c < s.kw; ++c) {
                  const long st = static_cast<long>(t + a) - pt;
                  const long sy = static_cast<long>(yy + b) - ph;
                  const long sx = static_cast<long>(xx + c) - pw;
                  if (st < 0 || sy < 0 || sx < 0 || st >= static_cast<long>(s.t) ||
                      sy >= static_cast<long>(s.h) || sx >= static_cast<long>(s.w)) {
                    continue;
                  }
                  const std::size_t xi = ((ci * s.t + static_cast<std::size_t>(st)) * s.h + static_cast<std::size_t>(sy)) * s.w +
                                         static_cast<std::size_t>(sx);
                  const std::size_t wi = (((co * s.cin + ci) * s.kt + a) * s.kh + b) * s.kw + c;
                  gw[wi] += g * x[xi];
                  gx[xi] += g * weight[wi];
                }
              }
            }
          }
        }
      }
    }
  }
  if (grad_x) std::transform(gx.begin(), gx.end(), grad_x, [](double v) { return static_cast<T>(v); });
  if (grad_weight) std::transform(gw.begin(), gw.end(), grad_weight, [](double v) { return static_cast<T>(v); });
  if (grad_bias) std::transform(gb.begin(), gb.end(), grad_bias, [](double v) { return static_cast<T>(v); });
}

template <typename T>
void maxpool3d_forward(const PoolShape &s, const T *x, T *y, std::uint32_t *argmax) {
  const std::size_t ot = s.t / s.pt, oh = s.h / s.ph, ow = s.w / s.pw;
  std::size_t o = 0;
  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t t = 0; t < ot; ++t)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx, ++o) {
          std::size_t best = ((c * s.t + t * s.pt) * s.h + yy * s.ph) * s.w + xx * s.pw;
          for (std::size_t a = 0; a < s.pt; ++a)
            for (std::size_t b = 0; b < s.ph; ++b)
              for (std::size_t d = 0; d < s.pw; ++d) {
                const std::size_t idx = ((c * s.t + t * s.pt + a) * s.h + yy * s.ph + b) * s.w + xx * s.pw + d;
                if (x[idx] > x[best]) best = idx;
              }
          y[o] = x[best];
          argmax[o] = static_cast<std::uint32_t>(best);
        }
}

template <typename T>
void upconv3d_forward(const UpShape &s, const T *x, const T *weight, const T *bias, T *y) {
  const std::size_t oh = s.h * s.ph, ow = s.w * s.pw, ot = s.t * s.pt, win = s.window();
  for (std::size_t co = 0; co < s.cout; ++co)
    for (std::size_t t = 0; t < ot; ++t)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const std::size_t tap = ((t % s.pt) * s.ph + yy % s.ph) * s.pw + xx % s.pw;
          const std::size_t n = ((t / s.pt) * s.h + yy / s.ph) * s.w + xx / s.pw;
          double acc = bias ? static_cast<double>(bias[co]) : 0.0;
          for (std::size_t ci = 0; ci < s.cin; ++ci) {
            acc += static_cast<double>(weight[(ci * s.cout + co) * win + tap]) * x[ci * s.in_voxels() + n];
          }
          y[((co * ot + t) * oh + yy) * ow + xx] = static_cast<T>(acc);
        }
}

template <typename T>
void upconv3d_backward(const UpShape &s, const T *x, const T *weight, const T *grad_y, T *grad_x,
                       T *grad_weight, T *grad_bias) {
  const std::size_t oh = s.h * s.ph, ow = s.w * s.pw, ot = s.t * s.pt, win = s.window(), n_in = s.in_voxels();
  std::vector<double> gx(s.cin * n_in, 0.0), gw(s.cin * s.cout * win, 0.0), gb(s.cout, 0.0);
  for (std::size_t co = 0; co < s.cout; ++co)
    for (std::size_t t = 0; t < ot; ++t)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const std::size_t tap = ((t % s.pt) * s.ph + yy % s.ph) * s.pw + xx % s.pw;
          const std::size_t n = ((t / s.pt) * s.h + yy / s.ph) * s.w + xx / s.pw;
          const double g = grad_y[((co * ot + t) * oh + yy) * ow + xx];
          gb[co] += g;
          for (std::size_t ci = 0; ci < s.cin; ++ci) {
            gw[(ci * s.cout + co) * win + tap] += g * x[ci * n_in + n];
            gx[ci * n_in + n] += g * weight[(ci * s.cout + co) * win + tap];
          }
        }
  if (grad_x) std::transform(gx.begin(), gx.end(), grad_x, [](double v) { return static_cast<T>(v); });
  if (grad_weight) std::transform(gw.begin(), gw.end(), grad_weight, [](double v) { return static_cast<T>(v); });
  if (grad_bias) std::transform(gb.begin(), gb.end(), grad_bias, [](double v) { return static_cast<T>(v); });
}

} // namespace reference

#define RECONLAB_INSTANTIATE(T)                                                                          \
  template void conv3d_forward<T>(const ConvShape &, const T *, const T *, const T *, T *);              \
  template void conv3d_backward<T>(const ConvShape &, const T *, const T *, const T *, T *, T *, T *);  \
  template void maxpool3d_forward<T>(const PoolShape &, const T *, T *, std::uint32_t *);                \
  template void maxpool3d_backward<T>(const PoolShape &, const T *, const std::uint32_t *, T *);         \
  template void upconv3d_forward<T>(const UpShape &, const T *, const T *, const T *, T *);              \
  template void upconv3d_backward<T>(const UpShape &, const T *, const T *, const T *, T *, T *, T *);  \
  template void relu_forward<T>(std::size_t, const T *, T *);                                            \
  template void relu_backward<T>(std::size_t, const T *, const T *, T *);                                \
  template void reference::conv3d_forward<T>(const ConvShape &, const T *, const T *, const T *, T *);   \
  template void reference::conv3d_backward<T>(const ConvShape &, const T *, const T *, const T *, T *, T *, T *); \
  template void reference::maxpool3d_forward<T>(const PoolShape &, const T *, T *, std::uint32_t *);     \
  template void reference::upconv3d_forward<T>(const UpShape &, const T *, const T *, const T *, T *);   \
  template void reference::upconv3d_backward<T>(const UpShape &, const T *, const T *, const T *, T *, T *, T *);

RECONLAB_INSTANTIATE(float)
RECONLAB_INSTANTIATE(double)

#undef RECONLAB_INSTANTIATE

} // namespace reconlab::nn

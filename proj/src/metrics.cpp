#include "reconlab/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace reconlab {

double rmse(const Cine &a, const Cine &b) {
  if (!a.same_shape(b)) {
    throw ShapeError("rmse: shape mismatch");
  }
  if (a.size() == 0) {
    throw ShapeError("rmse: empty cine");
  }
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = static_cast<double>(av[i]) - bv[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(av.size()));
}

namespace {

std::vector<double> gaussian_window(const SsimParams &p) {
  std::vector<double> g(p.window);
  const double c = 0.5 * static_cast<double>(p.window - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.window; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
    sum += g[i];
  }
  for (auto &v : g) {
    v /= sum;
  }
  return g;
}

// Separable 'valid' filtering of an H x W image.
std::vector<double> filter_valid(const std::vector<double> &img, std::size_t h, std::size_t w,
                                 const std::vector<double> &g) {
  const std::size_t k = g.size();
  const std::size_t oh = h - k + 1;
  const std::size_t ow = w - k + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        s += g[i] * img[y * w + x + i];
      }
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        s += g[i] * rows[(y + i) * ow + x];
      }
      out[y * ow + x] = s;
    }
  }
  return out;
}

} // namespace

double ssim_frame(std::span<const float> a, std::span<const float> b, std::size_t height, std::size_t width,
                  const SsimParams &p) {
  if (a.size() != height * width || b.size() != a.size()) {
    throw ShapeError("ssim: frame size mismatch");
  }
  if (height < p.window || width < p.window) {
    throw ShapeError("ssim: frame smaller than the window");
  }
  const auto g = gaussian_window(p);
  const std::size_t n = a.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a[i];
    y[i] = b[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, height, width, g);
  const auto my = filter_valid(y, height, width, g);
  const auto sxx = filter_valid(xx, height, width, g);
  const auto syy = filter_valid(yy, height, width, g);
  const auto sxy = filter_valid(xy, height, width, g);
  const double c1 = (p.k1 * p.range) * (p.k1 * p.range);
  const double c2 = (p.k2 * p.range) * (p.k2 * p.range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mx.size());
}

double ssim(const Cine &a, const Cine &b, const SsimParams &p) {
  if (!a.same_shape(b)) {
    throw ShapeError("ssim: shape mismatch");
  }
  if (a.frames() == 0) {
    throw ShapeError("ssim: empty cine");
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < a.frames(); ++t) {
    acc += ssim_frame(a.frame(t), b.frame(t), a.height(), a.width(), p);
  }
  return acc / static_cast<double>(a.frames());
}

std::vector<double> sample_profile(std::span<const float> frame, std::size_t height, std::size_t width,
                                   const LineProfile &line) {
  if (line.samples < 8) {
    throw ShapeError("line profile needs at least 8 samples");
  }
  if (frame.size() != height * width) {
    throw ShapeError("profile: frame size mismatch");
  }
  auto inside = [&](double y, double x) {
    return y >= 0.0 && x >= 0.0 && y <= static_cast<double>(height - 1) && x <= static_cast<double>(width - 1);
  };
  if (!inside(line.y0, line.x0) || !inside(line.y1, line.x1)) {
    throw ShapeError("line profile leaves the frame");
  }
  std::vector<double> v(line.samples);
  for (std::size_t i = 0; i < line.samples; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(line.samples - 1);
    const double y = line.y0 + s * (line.y1 - line.y0);
    const double x = line.x0 + s * (line.x1 - line.x0);
    const auto y0 = std::min(static_cast<std::size_t>(y), height - 1);
    const auto x0 = std::min(static_cast<std::size_t>(x), width - 1);
    const std::size_t y1 = std::min(y0 + 1, height - 1);
    const std::size_t x1 = std::min(x0 + 1, width - 1);
    const double ay = y - static_cast<double>(y0);
    const double ax = x - static_cast<double>(x0);
    const double top = frame[y0 * width + x0] * (1.0 - ax) + frame[y0 * width + x1] * ax;
    const double bot = frame[y1 * width + x0] * (1.0 - ax) + frame[y1 * width + x1] * ax;
    v[i] = top * (1.0 - ay) + bot * ay;
  }
  return v;
}

double profile_sharpness(std::span<const double> values, std::size_t degree) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw ShapeError("profile too short");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 1e-12 * std::max(1.0, std::abs(*hi)))) {
    throw NumericalError("edge sharpness of a constant profile is undefined");
  }
  // Chebyshev basis on u = 2s - 1.
  const std::size_t m = degree + 1;
  Eigen::MatrixXd V(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    double t0 = 1.0, t1 = u;
    for (std::size_t k = 0; k < m; ++k) {
      double tk = k == 0 ? 1.0 : k == 1 ? u : 0.0;
      if (k >= 2) {
        tk = 2.0 * u * t1 - t0;
        t0 = t1;
        t1 = tk;
      }
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = tk;
    }
    f(static_cast<Eigen::Index>(i)) = (values[i] - *lo) / range;
  }
  const Eigen::VectorXd c = V.completeOrthogonalDecomposition().solve(f);

  // d/ds = 2 d/du, T_k'(u) = k U_{k-1}(u).
  double best = 0.0;
  constexpr std::size_t kGrid = 2001;
  for (std::size_t j = 0; j < kGrid; ++j) {
    const double u = 2.0 * static_cast<double>(j) / static_cast<double>(kGrid - 1) - 1.0;
    double deriv = 0.0;
    double um2 = 0.0, um1 = 1.0; // U_{-1}, U_0
    for (std::size_t k = 1; k < m; ++k) {
      deriv += static_cast<double>(k) * um1 * c(static_cast<Eigen::Index>(k));
      const double next = k == 1 ? 2.0 * u : 2.0 * u * um1 - um2;
      um2 = um1;
      um1 = next;
    }
    best = std::max(best, std::abs(2.0 * deriv));
  }
  return best;
}

double edge_sharpness(std::span<const float> frame, std::size_t height, std::size_t width, const LineProfile &line) {
  const auto v = sample_profile(frame, height, width, line);
  return profile_sharpness(v);
}

double edge_sharpness(const Cine &cine, std::span<const LineProfile> lines) {
  if (lines.empty()) {
    throw ShapeError("edge sharpness needs at least one profile");
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < cine.frames(); ++t) {
    for (const auto &l : lines) {
      try {
        acc += edge_sharpness(cine.frame(t), cine.height(), cine.width(), l);
        ++n;
      } catch (const NumericalError &) {
      }
    }
  }
  if (n == 0) {
    throw NumericalError("every edge profile was flat");
  }
  return acc / static_cast<double>(n);
}

std::vector<LineProfile> phantom_edge_profiles(const PhantomSpec &spec, const DatasetConfig &cfg, CropShift shift,
                                               std::size_t length) {
  const double src = static_cast<double>(spec.matrix);
  const double scale = static_cast<double>(cfg.matrix) / src;
  const double c0 = static_cast<double>(spec.matrix / 2);
  const double start_y = static_cast<double>((cfg.matrix - cfg.crop) / 2) + shift.dy;
  const double start_x = static_cast<double>((cfg.matrix - cfg.crop) / 2) + shift.dx;
  const double cy = (c0 + spec.center_y * src + 0.5) * scale - 0.5 - start_y;
  const double cx = (c0 + spec.center_x * src + 0.5) * scale - 0.5 - start_x;
  const double r = spec.inner_radius * (1.0 - 0.5 * spec.contraction) * src * scale;
  const double half = 0.5 * static_cast<double>(length - 1);
  const double lim = static_cast<double>(cfg.crop - 1);
  std::vector<LineProfile> out;
  for (int i = 0; i < 6; ++i) {
    const double a = std::numbers::pi * (30.0 + 60.0 * i) / 180.0;
    const double dy = std::sin(a), dx = std::cos(a);
    LineProfile l;
    l.y0 = std::clamp(cy + (r - half) * dy, 0.0, lim);
    l.x0 = std::clamp(cx + (r - half) * dx, 0.0, lim);
    l.y1 = std::clamp(cy + (r + half) * dy, 0.0, lim);
    l.x1 = std::clamp(cx + (r + half) * dx, 0.0, lim);
    l.samples = length;
    out.push_back(l);
  }
  return out;
}

BlandAltman bland_altman(std::span<const double> ref, std::span<const double> test) {
  if (ref.size() != test.size()) {
    throw ShapeError("bland_altman: length mismatch");
  }
  const std::size_t n = ref.size();
  if (n < 2) {
    throw ShapeError("bland_altman needs at least 2 pairs");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += test[i] - ref[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = test[i] - ref[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, mean - 2.0 * sd, mean + 2.0 * sd};
}

double flicker_metric(const Cine &cine) {
  if (cine.frames() < 3) {
    throw ShapeError("flicker metric needs at least 3 frames");
  }
  const std::size_t n = cine.frame_size();
  double acc = 0.0;
  for (std::size_t t = 1; t + 1 < cine.frames(); ++t) {
    auto prev = cine.frame(t - 1);
    auto cur = cine.frame(t);
    auto next = cine.frame(t + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(next[i]) - 2.0 * cur[i] + prev[i];
      acc += d * d;
    }
  }
  return acc / static_cast<double>((cine.frames() - 2) * n);
}

void MetricReport::add(MetricRow row) {
  if (!(row.rmse >= 0.0) || !(row.wall_time_s >= 0.0) || row.ssim < -1.0 - 1e-9 || row.ssim > 1.0 + 1e-9) {
    throw NumericalError("metric row out of range for method " + row.method);
  }
  rows.push_back(std::move(row));
}

std::vector<MetricSummary> MetricReport::summarize() const {
  std::vector<MetricSummary> out;
  std::vector<std::vector<const MetricRow *>> groups;
  for (const auto &r : rows) {
    std::size_t g = 0;
    for (; g < out.size(); ++g) {
      const auto &s = out[g];
      if (s.method == r.method && s.pattern == r.pattern && s.sweep_axis == r.sweep_axis &&
          s.sweep_value == r.sweep_value) {
        break;
      }
    }
    if (g == out.size()) {
      MetricSummary s;
      s.method = r.method;
      s.pattern = r.pattern;
      s.sweep_axis = r.sweep_axis;
      s.sweep_value = r.sweep_value;
      out.push_back(s);
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto &s = out[g];
    const auto &rs = groups[g];
    s.n = rs.size();
    const double n = static_cast<double>(s.n);
    for (const auto *r : rs) {
      s.rmse_mean += r->rmse / n;
      s.ssim_mean += r->ssim / n;
      s.edge_sharpness_mean += r->edge_sharpness / n;
      s.wall_time_mean_s += r->wall_time_s / n;
    }
    if (s.n > 1) {
      double vr = 0.0, vs = 0.0;
      for (const auto *r : rs) {
        vr += (r->rmse - s.rmse_mean) * (r->rmse - s.rmse_mean);
        vs += (r->ssim - s.ssim_mean) * (r->ssim - s.ssim_mean);
      }
      s.rmse_sd = std::sqrt(vr / (n - 1.0));
      s.ssim_sd = std::sqrt(vs / (n - 1.0));
    }
  }
  return out;
}

void MetricReport::write_csv(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "method,pattern,sweep_axis,sweep_value,sample,rmse,ssim,edge_sharpness,wall_time_s\n";
  char buf[256];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6g,%zu,%.8g,%.8g,%.8g,%.6g\n", r.method.c_str(), r.pattern.c_str(),
                  r.sweep_axis.c_str(), r.sweep_value, r.sample, r.rmse, r.ssim, r.edge_sharpness, r.wall_time_s);
    out << buf;
  }
}

nlohmann::json MetricReport::summary_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &s : summarize()) {
    arr.push_back({{"method", s.method},
                   {"pattern", s.pattern},
                   {"sweep_axis", s.sweep_axis},
                   {"sweep_value", s.sweep_value},
                   {"n", s.n},
                   {"rmse_mean", s.rmse_mean},
                   {"rmse_sd", s.rmse_sd},
                   {"ssim_mean", s.ssim_mean},
                   {"ssim_sd", s.ssim_sd},
                   {"edge_sharpness_mean", s.edge_sharpness_mean},
                   {"wall_time_mean_s", s.wall_time_mean_s}});
  }
  return arr;
}

} // namespace reconlab

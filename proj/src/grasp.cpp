#include "reconlab/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace reconlab {

void GraspConfig::validate() const {
  if (!(lambda >= 0.0)) {
    throw ConfigError("grasp.lambda must be >= 0");
  }
  if (admm_iters < 1 || cg_iters < 1) {
    throw ConfigError("grasp iteration counts must be >= 1");
  }
  if (!(rho > 0.0)) {
    throw ConfigError("grasp.rho must be > 0");
  }
  if (!(cg_tol >= 0.0)) {
    throw ConfigError("grasp.cg_tol must be >= 0");
  }
}

void to_json(nlohmann::json &j, const GraspConfig &c) {
  j = {{"lambda", c.lambda},     {"admm_iters", c.admm_iters}, {"rho", c.rho},
       {"cg_iters", c.cg_iters}, {"cg_tol", c.cg_tol},         {"circular", c.circular}};
}

void from_json(const nlohmann::json &j, GraspConfig &c) {
  c = GraspConfig{};
  c.lambda = j.value("lambda", c.lambda);
  c.admm_iters = j.value("admm_iters", c.admm_iters);
  c.rho = j.value("rho", c.rho);
  c.cg_iters = j.value("cg_iters", c.cg_iters);
  c.cg_tol = j.value("cg_tol", c.cg_tol);
  c.circular = j.value("circular", c.circular);
}

std::vector<cdouble> temporal_diff(std::span<const cdouble> x, std::size_t frames, std::size_t frame_size,
                                   bool circular) {
  if (frames < 2) {
    throw ShapeError("temporal difference needs at least 2 frames");
  }
  if (x.size() != frames * frame_size) {
    throw ShapeError("temporal_diff: size mismatch");
  }
  const std::size_t nd = circular ? frames : frames - 1;
  std::vector<cdouble> d(nd * frame_size);
  for (std::size_t t = 0; t < nd; ++t) {
    const std::size_t next = (t + 1) % frames;
    for (std::size_t i = 0; i < frame_size; ++i) {
      d[t * frame_size + i] = x[next * frame_size + i] - x[t * frame_size + i];
    }
  }
  return d;
}

std::vector<cdouble> temporal_diff_adjoint(std::span<const cdouble> d, std::size_t frames, std::size_t frame_size,
                                           bool circular) {
  if (frames < 2) {
    throw ShapeError("temporal difference needs at least 2 frames");
  }
  const std::size_t nd = circular ? frames : frames - 1;
  if (d.size() != nd * frame_size) {
    throw ShapeError("temporal_diff_adjoint: size mismatch");
  }
  std::vector<cdouble> x(frames * frame_size);
  for (std::size_t t = 0; t < nd; ++t) {
    const std::size_t next = (t + 1) % frames;
    for (std::size_t i = 0; i < frame_size; ++i) {
      x[next * frame_size + i] += d[t * frame_size + i];
      x[t * frame_size + i] -= d[t * frame_size + i];
    }
  }
  return x;
}

cdouble soft_threshold(cdouble v, double tau) {
  const double m = std::abs(v);
  return m > tau ? v * ((m - tau) / m) : cdouble{};
}

double soft_threshold(double v, double tau) {
  const double m = std::abs(v) - tau;
  return m > 0.0 ? std::copysign(m, v) : 0.0;
}

namespace {

double dot_re(const std::vector<cdouble> &a, const std::vector<cdouble> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return s;
}

double norm2(const std::vector<cdouble> &a) { return std::sqrt(dot_re(a, a)); }

class Operator {
public:
  Operator(const RadialKSpace &k, const CoilMaps *maps, const GriddingKernel &kernel)
      : frames_(k.frames), coils_(k.coils), h_(k.height), w_(k.width), per_(k.per_coil()), maps_(maps) {
    for (std::size_t f = 0; f < frames_; ++f) {
      ops_.emplace_back(h_, w_, spoke_coordinates(k.spec, f), kernel);
    }
    scale_ = std::sqrt(static_cast<double>(h_ * w_) / static_cast<double>(per_));
  }

  std::size_t samples() const { return frames_ * coils_ * per_; }
  double scale() const { return scale_; }

  std::vector<cdouble> forward(const std::vector<cdouble> &x) const {
    std::vector<cdouble> y(samples());
    const std::size_t n = h_ * w_;
#pragma omp parallel for schedule(static)
    for (std::int64_t fi = 0; fi < static_cast<std::int64_t>(frames_); ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      ComplexFrame img(h_, w_);
      for (std::size_t c = 0; c < coils_; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
          img.data[i] = x[f * n + i] * coil(c, i);
        }
        const auto s = ops_[f].forward(img);
        cdouble *dst = y.data() + (f * coils_ + c) * per_;
        for (std::size_t i = 0; i < per_; ++i) {
          dst[i] = s[i] * scale_;
        }
      }
    }
    return y;
  }

  std::vector<cdouble> adjoint(const std::vector<cdouble> &y, bool compensated = false) const {
    const std::size_t n = h_ * w_;
    std::vector<cdouble> x(frames_ * n);
    const double s = compensated ? 1.0 : scale_;
#pragma omp parallel for schedule(static)
    for (std::int64_t fi = 0; fi < static_cast<std::int64_t>(frames_); ++fi) {
      const auto f = static_cast<std::size_t>(fi);
      for (std::size_t c = 0; c < coils_; ++c) {
        std::span<const cdouble> src(y.data() + (f * coils_ + c) * per_, per_);
        const ComplexFrame img = compensated ? ops_[f].adjoint_compensated(src) : ops_[f].adjoint(src);
        for (std::size_t i = 0; i < n; ++i) {
          x[f * n + i] += std::conj(coil(c, i)) * img.data[i] * s;
        }
      }
    }
    return x;
  }

private:
  cdouble coil(std::size_t c, std::size_t i) const {
    return maps_ == nullptr ? cdouble(1.0) : maps_->maps[c * h_ * w_ + i];
  }

  std::size_t frames_, coils_, h_, w_, per_;
  const CoilMaps *maps_;
  std::vector<Nufft> ops_;
  double scale_ = 1.0;
};

} // namespace

GraspResult grasp_reconstruct(const RadialKSpace &k, const GraspConfig &cfg, const GraspOptions &opts) {
  cfg.validate();
  if (k.frames < 2) {
    throw ShapeError("GRASP needs at least 2 frames");
  }
  if (k.samples.size() != k.frames * k.coils * k.per_coil()) {
    throw ShapeError("radial data size does not match its trajectory");
  }
  CoilMaps estimated;
  const CoilMaps *maps = opts.coil_maps;
  if (maps != nullptr) {
    if (maps->coils != k.coils || maps->height != k.height || maps->width != k.width) {
      throw ShapeError("coil maps do not match the radial data");
    }
  } else if (k.coils > 1) {
    estimated = estimate_coil_maps(k, 0.05, opts.kernel);
    maps = &estimated;
  }

  const Operator op(k, maps, opts.kernel);
  const std::size_t n = k.height * k.width;
  const std::size_t T = k.frames;

  std::vector<cdouble> y(k.samples.begin(), k.samples.end());
  GraspResult r;
  std::vector<cdouble> x = op.adjoint(y, true);
  double peak = 0.0;
  for (const auto &v : x) {
    peak = std::max(peak, std::abs(v));
  }
  r.data_scale = peak > 0.0 ? peak : 1.0;
  for (auto &v : x) {
    v /= r.data_scale;
  }
  for (auto &v : y) {
    v *= op.scale() / r.data_scale;
  }

  auto diff = [&](const std::vector<cdouble> &v) { return temporal_diff(v, T, n, cfg.circular); };
  auto diff_t = [&](const std::vector<cdouble> &v) { return temporal_diff_adjoint(v, T, n, cfg.circular); };
  auto normal = [&](const std::vector<cdouble> &v) {
    auto a = op.adjoint(op.forward(v));
    const auto d = diff_t(diff(v));
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] += cfg.rho * d[i];
    }
    return a;
  };
  auto keep = [&](std::size_t iter) {
    if (std::find(opts.snapshot_iters.begin(), opts.snapshot_iters.end(), iter) != opts.snapshot_iters.end()) {
      ComplexCine c(T, k.height, k.width);
      c.data = x;
      r.snapshots[iter] = std::move(c);
    }
  };
  keep(0);

  const std::vector<cdouble> aty = op.adjoint(y);
  std::vector<cdouble> z = diff(x);
  std::vector<cdouble> u(z.size());
  const double tau = cfg.lambda / cfg.rho;

  for (std::size_t it = 1; it <= cfg.admm_iters; ++it) {
    // x-update: CG on (A^H A + rho D^T D) x = A^H y + rho D^T (z - u), warm started.
    std::vector<cdouble> zu(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      zu[i] = z[i] - u[i];
    }
    std::vector<cdouble> b = diff_t(zu);
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = aty[i] + cfg.rho * b[i];
    }
    const double bnorm = norm2(b);
    std::vector<cdouble> res = normal(x);
    for (std::size_t i = 0; i < res.size(); ++i) {
      res[i] = b[i] - res[i];
    }
    std::vector<cdouble> p = res;
    double rs = dot_re(res, res);
    for (std::size_t cg = 0; cg < cfg.cg_iters && std::sqrt(rs) > cfg.cg_tol * bnorm; ++cg) {
      const auto mp = normal(p);
      const double pmp = dot_re(p, mp);
      if (!(pmp > 0.0)) {
        break;
      }
      const double alpha = rs / pmp;
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += alpha * p[i];
        res[i] -= alpha * mp[i];
      }
      const double rs_new = dot_re(res, res);
      const double beta = rs_new / rs;
      rs = rs_new;
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = res[i] + beta * p[i];
      }
    }

    const auto dx = diff(x);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = soft_threshold(dx[i] + u[i], tau);
      u[i] += dx[i] - z[i];
    }

    GraspIteration g;
    g.iter = it;
    const auto ax = op.forward(x);
    for (std::size_t i = 0; i < ax.size(); ++i) {
      g.fidelity += std::norm(ax[i] - y[i]);
    }
    g.fidelity *= 0.5;
    double l1 = 0.0, pr = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      l1 += std::abs(dx[i]);
      pr += std::norm(dx[i] - z[i]);
    }
    g.tv = cfg.lambda * l1;
    g.total = g.fidelity + g.tv;
    g.primal_residual = std::sqrt(pr);
    r.trace.push_back(g);
    if (!std::isfinite(g.total)) {
      throw NumericalError("GRASP objective became non-finite at iteration " + std::to_string(it));
    }
    keep(it);
  }

  Cine mag(T, k.height, k.width);
  auto mv = mag.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    mv[i] = static_cast<float>(std::abs(x[i]));
  }
  r.magnitude = normalize01(mag);
  r.x = ComplexCine(T, k.height, k.width);
  r.x.data = std::move(x);
  return r;
}

void write_grasp_trace(const std::filesystem::path &path, const std::vector<GraspIteration> &trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "iter,fidelity,tv,total,primal_residual\n";
  char line[160];
  for (const auto &g : trace) {
    std::snprintf(line, sizeof line, "%zu,%.10g,%.10g,%.10g,%.10g\n", g.iter, g.fidelity, g.tv, g.total,
                  g.primal_residual);
    out << line;
  }
}

} // namespace reconlab

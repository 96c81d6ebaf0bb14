#include "reconlab/kspace.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "reconlab/tensor_io.hpp"

namespace reconlab {

RadialKSpace::RadialKSpace(const TrajectorySpec &s, std::size_t f, std::size_t c, std::size_t h,
                           std::size_t w)
    : spec(s), frames(f), coils(c), height(h), width(w) {
  samples.assign(frames * coils * per_coil(), cfloat{});
}

void save_kspace(const std::filesystem::path &path, const RadialKSpace &k) {
  Tensor<cfloat> t({k.frames, k.coils, k.spec.spokes_per_frame, k.spec.samples_per_spoke()}, k.samples);
  save_tensor(path, t);
  nlohmann::json side{{"trajectory", k.spec}, {"height", k.height}, {"width", k.width}};
  std::ofstream out(path.string() + ".json");
  if (!out) {
    throw IoError("cannot write " + path.string() + ".json");
  }
  out << side.dump(2) << '\n';
}

RadialKSpace load_kspace(const std::filesystem::path &path) {
  const std::filesystem::path side_path = path.string() + ".json";
  if (!std::filesystem::exists(path) || !std::filesystem::exists(side_path)) {
    throw MissingArtifact("radial k-space not found: " + path.string());
  }
  std::ifstream in(side_path);
  nlohmann::json side = nlohmann::json::parse(in);
  auto spec = side.at("trajectory").get<TrajectorySpec>();
  auto t = load_complex(path);
  if (t.ndim() != 4 || t.dim(2) != spec.spokes_per_frame || t.dim(3) != spec.samples_per_spoke()) {
    throw FormatError("k-space tensor does not match its trajectory sidecar");
  }
  RadialKSpace k(spec, t.dim(0), t.dim(1), side.at("height").get<std::size_t>(),
                 side.at("width").get<std::size_t>());
  k.samples = std::move(t.storage());
  return k;
}

CoilMaps synthetic_coil_maps(std::size_t height, std::size_t width, std::size_t ncoils) {
  if (ncoils == 0) {
    throw ConfigError("ncoils must be >= 1");
  }
  CoilMaps m{ncoils, height, width, std::vector<cdouble>(ncoils * height * width, 1.0)};
  if (ncoils == 1) {
    return m;
  }
  const double cy = static_cast<double>(height / 2);
  const double cx = static_cast<double>(width / 2);
  const double extent = static_cast<double>(std::min(height, width));
  const double ring = 0.6 * extent;
  const double sigma = 0.45 * extent;
  for (std::size_t c = 0; c < ncoils; ++c) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(ncoils);
    const double py = cy + ring * std::sin(a);
    const double px = cx + ring * std::cos(a);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double d2 = (static_cast<double>(y) - py) * (static_cast<double>(y) - py) +
                          (static_cast<double>(x) - px) * (static_cast<double>(x) - px);
        m.maps[(c * height + y) * width + x] = std::exp(-d2 / (2.0 * sigma * sigma));
      }
    }
  }
  for (std::size_t p = 0; p < height * width; ++p) {
    double ss = 0.0;
    for (std::size_t c = 0; c < ncoils; ++c) {
      ss += std::norm(m.maps[c * height * width + p]);
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t c = 0; c < ncoils; ++c) {
      m.maps[c * height * width + p] *= inv;
    }
  }
  return m;
}

std::vector<ComplexFrame> simulate_coils(const ComplexFrame &frame, const CoilMaps &maps) {
  if (maps.height != frame.height || maps.width != frame.width) {
    throw ShapeError("coil maps do not match frame size");
  }
  std::vector<ComplexFrame> out(maps.coils, ComplexFrame(frame.height, frame.width));
  for (std::size_t c = 0; c < maps.coils; ++c) {
    auto s = maps.coil(c);
    for (std::size_t p = 0; p < frame.data.size(); ++p) {
      out[c].data[p] = s[p] * frame.data[p];
    }
  }
  return out;
}

std::vector<ComplexFrame> simulate_coils(const ComplexFrame &frame, std::size_t ncoils) {
  return simulate_coils(frame, synthetic_coil_maps(frame.height, frame.width, ncoils));
}

std::vector<float> combine_coils(std::span<const ComplexFrame> coil_frames) {
  if (coil_frames.empty()) {
    throw ConfigError("combine_coils needs at least one coil");
  }
  const std::size_t n = coil_frames.front().data.size();
  std::vector<float> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    double ss = 0.0;
    for (const auto &c : coil_frames) {
      ss += std::norm(c.data[p]);
    }
    out[p] = static_cast<float>(std::sqrt(ss));
  }
  return out;
}

namespace {

CoilMaps rss_normalize(std::vector<ComplexFrame> low) {
  CoilMaps m{low.size(), low.front().height, low.front().width, {}};
  const std::size_t n = m.height * m.width;
  m.maps.resize(m.coils * n);
  double peak = 0.0;
  std::vector<double> rss(n);
  for (std::size_t p = 0; p < n; ++p) {
    double ss = 0.0;
    for (const auto &c : low) {
      ss += std::norm(c.data[p]);
    }
    rss[p] = std::sqrt(ss);
    peak = std::max(peak, rss[p]);
  }
  const double floor = 1e-8 * peak;
  for (std::size_t c = 0; c < m.coils; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      m.maps[c * n + p] = rss[p] > floor ? low[c].data[p] / rss[p] : cdouble{};
    }
  }
  return m;
}

double hann_radial(double r, double radius) {
  if (r >= radius) {
    return 0.0;
  }
  return 0.5 * (1.0 + std::cos(std::numbers::pi * r / radius));
}

} // namespace

CoilMaps estimate_coil_maps(std::span<const ComplexFrame> coil_images, double radius) {
  if (coil_images.empty()) {
    throw ConfigError("estimate_coil_maps needs at least one coil");
  }
  std::vector<ComplexFrame> low;
  for (const auto &img : coil_images) {
    ComplexFrame k = fft2_centered(img);
    for (std::size_t y = 0; y < k.height; ++y) {
      const double fy = (static_cast<double>(y) - static_cast<double>(k.height / 2)) / static_cast<double>(k.height);
      for (std::size_t x = 0; x < k.width; ++x) {
        const double fx = (static_cast<double>(x) - static_cast<double>(k.width / 2)) / static_cast<double>(k.width);
        k.at(y, x) *= hann_radial(std::hypot(fy, fx), radius);
      }
    }
    low.push_back(ifft2_centered(k));
  }
  return rss_normalize(std::move(low));
}

CoilMaps estimate_coil_maps(const RadialKSpace &kspace, double radius, GriddingKernel kernel) {
  std::vector<double> angles;
  for (std::size_t f = 0; f < kspace.frames; ++f) {
    auto a = spoke_angles(kspace.spec, f);
    angles.insert(angles.end(), a.begin(), a.end());
  }
  const SpokeSet pooled = spokes_from_angles(angles, kspace.spec.samples_per_spoke());
  const Nufft op(kspace.height, kspace.width, pooled, kernel);
  std::vector<ComplexFrame> low;
  const std::size_t per = kspace.per_coil();
  for (std::size_t c = 0; c < kspace.coils; ++c) {
    std::vector<cdouble> y(pooled.size());
    for (std::size_t f = 0; f < kspace.frames; ++f) {
      auto src = kspace.frame_coil(f, c);
      for (std::size_t s = 0; s < per; ++s) {
        const std::size_t g = f * per + s;
        const double r = std::hypot(pooled.kx[g], pooled.ky[g]);
        y[g] = cdouble(src[s]) * hann_radial(r, radius);
      }
    }
    low.push_back(op.adjoint_compensated(y));
  }
  return rss_normalize(std::move(low));
}

Corrupted corrupt_cine(const Cine &cine, const TrajectorySpec &spec, const CorruptOptions &opts) {
  spec.validate();
  const std::size_t h = cine.height();
  const std::size_t w = cine.width();
  Corrupted out{Cine(cine.frames(), h, w, cine.frame_dt_ms()),
                RadialKSpace(spec, cine.frames(), opts.ncoils, h, w)};
  const CoilMaps maps = synthetic_coil_maps(h, w, opts.ncoils);
  const auto frames = static_cast<std::int64_t>(cine.frames());
  // Frames are independent; each writes only its own slice of the outputs.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t fi = 0; fi < frames; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    const Nufft op(h, w, spoke_coordinates(spec, f), opts.kernel);
    const auto coil_images = simulate_coils(to_complex(cine.frame(f), h, w), maps);
    std::vector<ComplexFrame> recon;
    recon.reserve(coil_images.size());
    for (std::size_t c = 0; c < coil_images.size(); ++c) {
      const auto y = op.forward(coil_images[c]);
      auto dst = out.kspace.frame_coil(f, c);
      for (std::size_t s = 0; s < y.size(); ++s) {
        dst[s] = cfloat(y[s]);
      }
      recon.push_back(op.adjoint_compensated(y));
    }
    const auto mag = combine_coils(recon);
    std::copy(mag.begin(), mag.end(), out.aliased.frame(f).begin());
  }
  return out;
}

Cine regrid_cine(const RadialKSpace &kspace, GriddingKernel kernel) {
  Cine out(kspace.frames, kspace.height, kspace.width);
  const auto frames = static_cast<std::int64_t>(kspace.frames);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t fi = 0; fi < frames; ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    const Nufft op(kspace.height, kspace.width, spoke_coordinates(kspace.spec, f), kernel);
    std::vector<ComplexFrame> recon;
    for (std::size_t c = 0; c < kspace.coils; ++c) {
      auto src = kspace.frame_coil(f, c);
      std::vector<cdouble> y(src.begin(), src.end());
      recon.push_back(op.adjoint_compensated(y));
    }
    const auto mag = combine_coils(recon);
    std::copy(mag.begin(), mag.end(), out.frame(f).begin());
  }
  return out;
}

} // namespace reconlab

#include "reconlab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "reconlab/rng.hpp"
#include "reconlab/tensor_io.hpp"

namespace reconlab {

void DatasetConfig::validate() const {
  if (n_train + n_test < 1) {
    throw ConfigError("dataset needs at least one sample");
  }
  if (crop > matrix) {
    throw ConfigError("dataset.crop must not exceed dataset.matrix");
  }
  if (frames < 2) {
    throw ConfigError("dataset.frames must be >= 2");
  }
  if (ncoils < 1) {
    throw ConfigError("dataset.ncoils must be >= 1");
  }
  if (phantom.rr_min_ms < frame_dt_ms || phantom.rr_max_ms < phantom.rr_min_ms) {
    throw ConfigError("dataset.phantom R-R range is invalid");
  }
}

void to_json(nlohmann::json &j, const DatasetConfig &c) {
  j = {{"n_train", c.n_train},   {"n_test", c.n_test},           {"matrix", c.matrix},
       {"crop", c.crop},         {"frames", c.frames},           {"frame_dt_ms", c.frame_dt_ms},
       {"ncoils", c.ncoils},     {"readout_oversampling", c.readout_oversampling},
       {"store_kspace", c.store_kspace}, {"phantom", c.phantom}};
}

void from_json(const nlohmann::json &j, DatasetConfig &c) {
  c = DatasetConfig{};
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  c.matrix = j.value("matrix", c.matrix);
  c.crop = j.value("crop", c.crop);
  c.frames = j.value("frames", c.frames);
  c.frame_dt_ms = j.value("frame_dt_ms", c.frame_dt_ms);
  c.ncoils = j.value("ncoils", c.ncoils);
  c.readout_oversampling = j.value("readout_oversampling", c.readout_oversampling);
  c.store_kspace = j.value("store_kspace", c.store_kspace);
  if (j.contains("phantom")) {
    c.phantom = j.at("phantom").get<PhantomRanges>();
  }
}

Cine resample_pipeline(const Cine &src, double rr_ms, std::size_t matrix, double frame_dt_ms) {
  if (rr_ms < frame_dt_ms) {
    throw ConfigError("R-R interval shorter than one real-time frame");
  }
  if (src.frames() < 1 || matrix < 1) {
    throw ShapeError("empty cine");
  }
  // Spatial: bilinear with pixel-centre alignment.
  const std::size_t h = src.height();
  const std::size_t w = src.width();
  Cine spatial(src.frames(), matrix, matrix);
  const double sy = static_cast<double>(h) / static_cast<double>(matrix);
  const double sx = static_cast<double>(w) / static_cast<double>(matrix);
  for (std::size_t y = 0; y < matrix; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ay = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < matrix; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double ax = fx - static_cast<double>(x0);
      for (std::size_t t = 0; t < src.frames(); ++t) {
        const double top = src.at(t, y0, x0) * (1.0 - ax) + src.at(t, y0, x1) * ax;
        const double bot = src.at(t, y1, x0) * (1.0 - ax) + src.at(t, y1, x1) * ax;
        spatial.at(t, y, x) = static_cast<float>(top * (1.0 - ay) + bot * ay);
      }
    }
  }

  // Temporal: the source covers one cycle, so interpolation wraps around.
  const auto out_frames = static_cast<std::size_t>(std::floor(rr_ms / frame_dt_ms + 1e-9));
  Cine out(out_frames, matrix, matrix, frame_dt_ms);
  const double src_dt = rr_ms / static_cast<double>(src.frames());
  for (std::size_t j = 0; j < out_frames; ++j) {
    const double pos = static_cast<double>(j) * frame_dt_ms / src_dt;
    const auto i0 = static_cast<std::size_t>(std::floor(pos)) % src.frames();
    const std::size_t i1 = (i0 + 1) % src.frames();
    const double a = pos - std::floor(pos);
    auto a0 = spatial.frame(i0);
    auto a1 = spatial.frame(i1);
    auto dst = out.frame(j);
    for (std::size_t p = 0; p < dst.size(); ++p) {
      dst[p] = static_cast<float>(a0[p] * (1.0 - a) + a1[p] * a);
    }
  }
  return out;
}

Cine crop_center(const Cine &cine, std::size_t size, CropShift shift) {
  const long y0 = static_cast<long>((cine.height() - std::min(size, cine.height())) / 2) + shift.dy;
  const long x0 = static_cast<long>((cine.width() - std::min(size, cine.width())) / 2) + shift.dx;
  if (size > cine.height() || size > cine.width() || y0 < 0 || x0 < 0 ||
      y0 + static_cast<long>(size) > static_cast<long>(cine.height()) ||
      x0 + static_cast<long>(size) > static_cast<long>(cine.width())) {
    throw ShapeError("crop region out of bounds");
  }
  Cine out(cine.frames(), size, size, cine.frame_dt_ms());
  for (std::size_t t = 0; t < cine.frames(); ++t) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        out.at(t, y, x) = cine.at(t, static_cast<std::size_t>(y0) + y, static_cast<std::size_t>(x0) + x);
      }
    }
  }
  return out;
}

Cine interp_frames(const Cine &cine, std::size_t target_frames) {
  if (cine.frames() < 2) {
    throw ShapeError("temporal interpolation needs at least two frames");
  }
  if (target_frames < 2) {
    throw ShapeError("target frame count must be >= 2");
  }
  const std::size_t n = cine.frames();
  const double dt = cine.frame_dt_ms() * static_cast<double>(n - 1) / static_cast<double>(target_frames - 1);
  Cine out(target_frames, cine.height(), cine.width(), dt);
  for (std::size_t j = 0; j < target_frames; ++j) {
    if (j == target_frames - 1) {
      std::copy(cine.frame(n - 1).begin(), cine.frame(n - 1).end(), out.frame(j).begin());
      continue;
    }
    const double pos = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(target_frames - 1);
    const auto i0 = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double a = pos - static_cast<double>(i0);
    auto a0 = cine.frame(i0);
    auto a1 = cine.frame(i1);
    auto dst = out.frame(j);
    if (a == 0.0) {
      std::copy(a0.begin(), a0.end(), dst.begin());
      continue;
    }
    for (std::size_t p = 0; p < dst.size(); ++p) {
      dst[p] = static_cast<float>(a0[p] + a * (static_cast<double>(a1[p]) - a0[p]));
    }
  }
  return out;
}

Cine add_noise_to_snr(const Cine &cine, double snr_db, std::uint64_t seed, SnrConvention convention) {
  if (!std::isfinite(snr_db)) {
    throw ConfigError("SNR must be finite");
  }
  double ss = 0.0;
  for (float v : cine.values()) {
    ss += static_cast<double>(v) * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(1, cine.size())));
  if (!(rms > 0.0)) {
    throw NumericalError("cannot set SNR of an all-zero cine");
  }
  // Amplitude: 20 log10(rms / sigma). Power: the same ratio read as 10 log10.
  const double factor = convention == SnrConvention::Amplitude ? 20.0 : 10.0;
  const double sigma = rms / std::pow(10.0, snr_db / factor);
  Rng rng = Rng::stream(seed, "snr-noise");
  Cine out = cine;
  for (float &v : out.values()) {
    v = static_cast<float>(std::max(0.0, v + sigma * rng.normal()));
  }
  return out;
}

Cine to_network_grid(const Cine &native, const DatasetConfig &cfg, CropShift shift) {
  return normalize01(interp_frames(crop_center(native, cfg.crop, shift), cfg.frames));
}

NativeSample build_native(std::size_t index, const TrajectorySpec &traj, std::uint64_t seed,
                          const DatasetConfig &cfg, PipelineTrace *trace) {
  auto note = [&](const char *stage) {
    if (trace != nullptr) {
      trace->emplace_back(stage);
    }
  };
  NativeSample n;
  n.spec = traj;
  n.spec.readout_len = cfg.matrix;
  n.spec.readout_oversampling = cfg.readout_oversampling;
  n.phantom = random_phantom_spec(seed, index, cfg.phantom);

  const Cine source = generate_phantom(n.phantom);
  note("generate_phantom");
  n.truth = resample_pipeline(source, n.phantom.rr_ms, cfg.matrix, cfg.frame_dt_ms);
  note("resample_pipeline");

  // Corruption runs on the native grid before any cropping or frame interpolation.
  CorruptOptions opts;
  opts.ncoils = cfg.ncoils;
  Corrupted corrupted = corrupt_cine(n.truth, n.spec, opts);
  note("corrupt_cine");
  n.aliased = std::move(corrupted.aliased);
  n.kspace = std::move(corrupted.kspace);
  return n;
}

PairedSample build_sample(std::size_t index, const TrajectorySpec &traj, std::uint64_t seed,
                          const DatasetConfig &cfg, CropShift shift, PipelineTrace *trace) {
  auto note = [&](const char *stage) {
    if (trace != nullptr) {
      trace->emplace_back(stage);
    }
  };
  NativeSample n = build_native(index, traj, seed, cfg, trace);
  PairedSample s;
  s.index = index;
  s.spec = n.spec;
  s.shift = shift;
  s.phantom = n.phantom;
  s.native_frames = n.truth.frames();

  auto branch = [&](const Cine &native, const std::string &name) {
    Cine c = crop_center(native, cfg.crop, shift);
    note((name + ":crop_center").c_str());
    c = interp_frames(c, cfg.frames);
    note((name + ":interp_frames").c_str());
    c = normalize01(c);
    note((name + ":normalize01").c_str());
    return c;
  };
  s.truth = branch(n.truth, "truth");
  s.aliased = branch(n.aliased, "aliased");
  s.kspace = std::move(n.kspace);
  return s;
}

std::vector<PairedSample> build_dataset(std::size_t n_samples, const TrajectorySpec &traj, std::uint64_t seed,
                                        const DatasetConfig &cfg, std::size_t first_index) {
  if (n_samples < 1) {
    throw ConfigError("build_dataset needs n >= 1");
  }
  cfg.validate();
  std::vector<PairedSample> out(n_samples);
  const auto n = static_cast<std::int64_t>(n_samples);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = build_sample(first_index + static_cast<std::size_t>(i), traj, seed, cfg);
  }
  return out;
}

std::filesystem::path sample_dir(const std::filesystem::path &root, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "sample_%05zu", index);
  return root / name;
}

void save_sample(const std::filesystem::path &root, const PairedSample &s, const std::string &split) {
  const auto dir = sample_dir(root, s.index);
  std::filesystem::create_directories(dir);
  save_cine(dir / "truth.rct", s.truth);
  save_cine(dir / "aliased.rct", s.aliased);
  nlohmann::json meta{{"index", s.index},
                      {"split", split},
                      {"phantom", s.phantom},
                      {"trajectory", s.spec},
                      {"rr_ms", s.phantom.rr_ms},
                      {"crop_shift", {s.shift.dy, s.shift.dx}},
                      {"native_frames", s.native_frames},
                      {"frame_dt_ms", s.truth.frame_dt_ms()}};
  if (s.kspace) {
    save_kspace(dir / "kspace.rct", *s.kspace);
  }
  std::ofstream out(dir / "meta.json");
  if (!out) {
    throw IoError("cannot write " + (dir / "meta.json").string());
  }
  out << meta.dump(2) << '\n';
}

PairedSample load_sample(const std::filesystem::path &dir, bool with_kspace) {
  if (!std::filesystem::exists(dir / "meta.json")) {
    throw MissingArtifact("sample metadata missing: " + dir.string());
  }
  std::ifstream in(dir / "meta.json");
  const auto meta = nlohmann::json::parse(in);
  PairedSample s;
  s.index = meta.at("index");
  s.phantom = meta.at("phantom").get<PhantomSpec>();
  s.spec = meta.at("trajectory").get<TrajectorySpec>();
  s.shift = {meta.at("crop_shift").at(0).get<int>(), meta.at("crop_shift").at(1).get<int>()};
  s.native_frames = meta.at("native_frames");
  const double dt = meta.value("frame_dt_ms", 0.0);
  s.truth = load_cine(dir / "truth.rct", dt);
  s.aliased = load_cine(dir / "aliased.rct", dt);
  if (with_kspace) {
    s.kspace = load_kspace(dir / "kspace.rct");
  }
  return s;
}

std::vector<PairedSample> load_dataset(const std::filesystem::path &root, const std::string &split,
                                       bool with_kspace) {
  if (!std::filesystem::is_directory(root)) {
    throw MissingArtifact("dataset directory not found: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto &entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("sample_", 0) == 0) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<PairedSample> out;
  for (const auto &d : dirs) {
    if (!split.empty()) {
      std::ifstream in(d / "meta.json");
      if (nlohmann::json::parse(in).value("split", std::string{}) != split) {
        continue;
      }
    }
    out.push_back(load_sample(d, with_kspace));
  }
  if (out.empty()) {
    throw MissingArtifact("no samples in " + root.string() + (split.empty() ? "" : " for split " + split));
  }
  return out;
}

} // namespace reconlab

#include "reconlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>

#include "reconlab/grasp.hpp"
#include "reconlab/png_export.hpp"
#include "reconlab/rng.hpp"
#include "reconlab/tensor_io.hpp"

namespace fs = std::filesystem;

namespace reconlab {

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_atomic(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out << text;
    if (!out) {
      throw IoError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string sample_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", index);
  return buf;
}

nn::UNetParams load_model(const ExperimentConfig &cfg, const ModelSpec &m) {
  const auto path = checkpoint_path(cfg, m);
  if (!fs::exists(path)) {
    throw MissingArtifact("checkpoint not found: " + path.string() + " (run `train` first)");
  }
  auto p = nn::load_checkpoint(path);
  if (p.config.mode == nn::NetMode::Spatiotemporal && p.config.frames != cfg.dataset.frames) {
    throw ConfigError("checkpoint was trained for " + std::to_string(p.config.frames) + " frames");
  }
  return p;
}

// Minimal line chart: one polyline per series of (x, y) points.
void write_svg_plot(const fs::path &path, const std::string &title, const std::string &xlabel,
                    const std::string &ylabel, const std::vector<std::pair<double, double>> &points) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &p : points) {
    if (std::isfinite(p.first) && std::isfinite(p.second)) {
      pts.push_back(p);
    }
  }
  if (pts.size() < 2) {
    return;
  }
  double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
  for (const auto &[x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 == x0) {
    x1 = x0 + 1.0;
  }
  if (y1 == y0) {
    y1 = y0 + 1e-6;
  }
  const double W = 480, H = 320, m = 50;
  auto sx = [&](double x) { return m + (x - x0) / (x1 - x0) * (W - 2 * m); };
  auto sy = [&](double y) { return H - m - (y - y0) / (y1 - y0) * (H - 2 * m); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  s += "<text x=\"240\" y=\"310\" text-anchor=\"middle\" font-size=\"12\">" + xlabel + "</text>\n";
  s += "<text x=\"12\" y=\"160\" font-size=\"12\" transform=\"rotate(-90 12 160)\">" + ylabel + "</text>\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"10\">%.4g</text>\n", 2.0, sy(y1) + 4, y1);
  s += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"10\">%.4g</text>\n", 2.0, sy(y0) + 4, y0);
  s += buf;
  s += "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (const auto &[x, y] : pts) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f ", sx(x), sy(y));
    s += buf;
  }
  s += "\"/>\n</svg>\n";
  write_text_atomic(path, s);
}

} // namespace

std::string model_tag(const ModelSpec &m) {
  std::string tag(pattern_name(m.pattern));
  if (m.mode == nn::NetMode::PerFrame) {
    tag += "_2d";
  }
  if (m.loss == nn::LossKind::L1) {
    tag += "_l1";
  }
  return tag;
}

fs::path dataset_root(const ExperimentConfig &cfg, Pattern p) {
  return fs::path(cfg.output_dir) / "dataset" / pattern_name(p);
}

fs::path model_dir(const ExperimentConfig &cfg, const ModelSpec &m) {
  return fs::path(cfg.output_dir) / "models" / model_tag(m);
}

fs::path checkpoint_path(const ExperimentConfig &cfg, const ModelSpec &m) { return model_dir(cfg, m) / "net.rlck"; }

RunManifest::RunManifest(const ExperimentConfig &cfg, std::string command)
    : cfg_(cfg), command_(std::move(command)), started_(utc_now()) {}

void RunManifest::add(const fs::path &file) {
  files_.push_back(fs::relative(file, cfg_.output_dir).generic_string());
}

void RunManifest::add_tree(const fs::path &dir) {
  std::vector<std::string> found;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      found.push_back(fs::relative(e.path(), cfg_.output_dir).generic_string());
    }
  }
  std::sort(found.begin(), found.end());
  files_.insert(files_.end(), found.begin(), found.end());
}

fs::path RunManifest::write(const std::string &suffix) {
  nlohmann::json j{{"command", command_},
                   {"config_hash", hex64(config_hash(cfg_))},
                   {"tool_version", kToolVersion},
                   {"started", started_},
                   {"finished", utc_now()},
                   {"files", files_},
                   {"config", to_json(cfg_)}};
  const fs::path path =
      fs::path(cfg_.output_dir) / "manifests" / (command_ + (suffix.empty() ? "" : "_" + suffix) + ".json");
  write_text_atomic(path, j.dump(2) + "\n");
  return path;
}

std::string split_of(const DatasetConfig &cfg, std::size_t index) { return index < cfg.n_train ? "train" : "test"; }

nn::UNetConfig net_config(const ExperimentConfig &cfg, nn::NetMode mode) {
  nn::UNetConfig n = cfg.unet;
  n.mode = mode;
  n.frames = cfg.dataset.frames;
  return n;
}

nn::TrainConfig train_config(const ExperimentConfig &cfg, nn::LossKind loss) {
  nn::TrainConfig t = cfg.train;
  t.loss = loss;
  t.seed = cfg.seed;
  return t;
}

std::vector<std::size_t> test_indices(const ExperimentConfig &cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cfg.dataset.n_test; ++i) {
    if (cfg.sweeps.max_samples > 0 && idx.size() >= cfg.sweeps.max_samples) {
      break;
    }
    idx.push_back(cfg.dataset.n_train + i);
  }
  return idx;
}

MetricRow evaluate(const Cine &output, const Cine &truth, const PhantomSpec &phantom, CropShift shift,
                   const ExperimentConfig &cfg) {
  MetricRow r;
  r.rmse = rmse(output, truth);
  r.ssim = ssim(output, truth, cfg.metrics.ssim);
  try {
    const auto lines = phantom_edge_profiles(phantom, cfg.dataset, shift, cfg.metrics.profile_length);
    r.edge_sharpness = edge_sharpness(output, lines);
  } catch (const NumericalError &) {
    r.edge_sharpness = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<fs::path> cmd_make_dataset(const ExperimentConfig &cfg) {
  RunManifest manifest(cfg, "make-dataset");
  std::vector<fs::path> roots;
  const std::size_t n = cfg.dataset.n_train + cfg.dataset.n_test;
  for (Pattern p : cfg.patterns) {
    const fs::path root = dataset_root(cfg, p);
    fs::remove_all(root);
    fs::create_directories(root);
    auto samples = build_dataset(n, cfg.trajectory_for(p), cfg.seed, cfg.dataset);
    for (auto &s : samples) {
      if (!cfg.dataset.store_kspace) {
        s.kspace.reset();
      }
      save_sample(root, s, split_of(cfg.dataset, s.index));
    }
    manifest.add_tree(root);
    roots.push_back(root);
  }
  manifest.write();
  return roots;
}

TrainOutcome cmd_train(const ExperimentConfig &cfg, const ModelSpec &model) {
  RunManifest manifest(cfg, "train");
  const auto samples = load_dataset(dataset_root(cfg, model.pattern), "train");
  std::vector<nn::TrainPair> pairs;
  for (const auto &s : samples) {
    pairs.push_back({&s.aliased, &s.truth});
  }
  const fs::path dir = model_dir(cfg, model);
  fs::create_directories(dir);
  const nlohmann::json extra{{"model", model_tag(model)}, {"config_hash", hex64(config_hash(cfg))}};
  const auto result = nn::train(pairs, net_config(cfg, model.mode), train_config(cfg, model.loss),
                                [&](std::size_t epoch, const nn::UNetParams &p) {
                                  char name[32];
                                  std::snprintf(name, sizeof name, "epoch_%04zu.rlck", epoch);
                                  fs::create_directories(dir / "checkpoints");
                                  nn::save_checkpoint(dir / "checkpoints" / name, p, extra);
                                  manifest.add(dir / "checkpoints" / name);
                                });
  TrainOutcome out;
  out.checkpoint = checkpoint_path(cfg, model);
  out.loss_csv = dir / "loss.csv";
  out.loss_history = result.loss_history;
  nn::save_checkpoint(out.checkpoint, result.params, extra);
  nn::write_loss_history(out.loss_csv, result.loss_history);
  manifest.add(out.checkpoint);
  manifest.add(out.loss_csv);
  manifest.write(model_tag(model));
  return out;
}

ReconMethod parse_method(const std::string &name) {
  if (name == "grid") {
    return ReconMethod::Grid;
  }
  if (name == "grasp") {
    return ReconMethod::Grasp;
  }
  if (name == "unet") {
    return ReconMethod::UNet;
  }
  throw ConfigError("unknown method '" + name + "' (grid, grasp, unet)");
}

std::string method_name(ReconMethod m) {
  switch (m) {
  case ReconMethod::Grid:
    return "grid";
  case ReconMethod::Grasp:
    return "grasp";
  case ReconMethod::UNet:
    return "unet";
  }
  return "?";
}

MetricReport cmd_recon(const ExperimentConfig &cfg, const ReconOptions &opts) {
  RunManifest manifest(cfg, "recon");
  const Pattern pattern = opts.model.pattern;
  const bool needs_kspace = std::any_of(opts.methods.begin(), opts.methods.end(),
                                        [](ReconMethod m) { return m != ReconMethod::UNet; });
  auto samples = load_dataset(dataset_root(cfg, pattern), "test", needs_kspace);
  if (opts.max_samples > 0 && samples.size() > opts.max_samples) {
    samples.resize(opts.max_samples);
  }
  std::optional<nn::UNetParams> net;
  if (std::find(opts.methods.begin(), opts.methods.end(), ReconMethod::UNet) != opts.methods.end()) {
    net = load_model(cfg, opts.model);
  }
  const fs::path root = fs::path(cfg.output_dir) / "recon" / model_tag(opts.model);
  MetricReport report;
  for (const auto &s : samples) {
    for (ReconMethod m : opts.methods) {
      Cine out;
      double seconds = 0.0;
      const fs::path dir = root / method_name(m);
      fs::create_directories(dir);
      if (m == ReconMethod::Grid) {
        auto [c, t] = timed([&] { return to_network_grid(regrid_cine(*s.kspace), cfg.dataset, s.shift); });
        out = std::move(c);
        seconds = t;
      } else if (m == ReconMethod::Grasp) {
        auto [r, t] = timed([&] { return grasp_reconstruct(*s.kspace, cfg.grasp); });
        out = to_network_grid(r.magnitude, cfg.dataset, s.shift);
        seconds = t;
        const fs::path trace = dir / (sample_name(s.index) + "_objective.csv");
        write_grasp_trace(trace, r.trace);
        manifest.add(trace);
      } else {
        auto [c, t] = timed([&] { return nn::unet_forward(*net, s.aliased); });
        out = std::move(c);
        seconds = t;
      }
      const fs::path file = dir / (sample_name(s.index) + ".rct");
      save_cine(file, out);
      manifest.add(file);
      if (opts.png) {
        for (const auto &f : export_frames(out, dir / (sample_name(s.index) + "_png"), out.height() / 2)) {
          manifest.add(f);
        }
      }
      MetricRow row = evaluate(out, s.truth, s.phantom, s.shift, cfg);
      row.method = method_name(m);
      row.pattern = pattern_name(pattern);
      row.sample = s.index;
      row.wall_time_s = seconds;
      report.add(row);
    }
  }
  report.write_csv(root / "metrics.csv");
  nlohmann::json summary{{"groups", report.summary_json()}};
  double grasp_t = 0.0, unet_t = 0.0;
  for (const auto &g : report.summarize()) {
    if (g.method == "grasp") {
      grasp_t = g.wall_time_mean_s;
    } else if (g.method == "unet") {
      unet_t = g.wall_time_mean_s;
    }
  }
  if (grasp_t > 0.0 && unet_t > 0.0) {
    summary["grasp_over_unet_time_ratio"] = grasp_t / unet_t;
    std::fprintf(stderr, "recon: grasp %.3f s/slice, unet %.3f s/slice, ratio %.1fx\n", grasp_t, unet_t,
                 grasp_t / unet_t);
  }
  write_text_atomic(root / "summary.json", summary.dump(2) + "\n");
  manifest.add(root / "metrics.csv");
  manifest.add(root / "summary.json");
  manifest.write(model_tag(opts.model));
  return report;
}

MetricReport cmd_compare_patterns(const ExperimentConfig &cfg, nn::NetMode mode, nn::LossKind loss) {
  RunManifest manifest(cfg, "compare-patterns");
  std::vector<nn::UNetParams> nets;
  for (Pattern p : kAllPatterns) {
    nets.push_back(load_model(cfg, ModelSpec{p, mode, loss}));
  }
  MetricReport report;
  for (std::size_t k = 0; k < 4; ++k) {
    const Pattern p = kAllPatterns[k];
    for (const auto &s : load_dataset(dataset_root(cfg, p), "test")) {
      auto [out, t] = timed([&] { return nn::unet_forward(nets[k], s.aliased); });
      MetricRow row = evaluate(out, s.truth, s.phantom, s.shift, cfg);
      row.method = "unet";
      row.pattern = pattern_name(p);
      row.sample = s.index;
      row.wall_time_s = t;
      report.add(row);
    }
  }
  const fs::path dir = fs::path(cfg.output_dir) / "compare";
  fs::create_directories(dir);
  report.write_csv(dir / "patterns_samples.csv");
  std::string csv = "pattern,n,rmse_mean,rmse_sd,ssim_mean,ssim_sd\n";
  std::string md = "| pattern | n | RMSE (x1e-2) | SSIM |\n|---|---|---|---|\n";
  char buf[256];
  for (const auto &g : report.summarize()) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.8g,%.8g,%.8g,%.8g\n", g.pattern.c_str(), g.n, g.rmse_mean, g.rmse_sd,
                  g.ssim_mean, g.ssim_sd);
    csv += buf;
    std::snprintf(buf, sizeof buf, "| %s | %zu | %.2f +- %.2f | %.4f +- %.4f |\n", g.pattern.c_str(), g.n,
                  100.0 * g.rmse_mean, 100.0 * g.rmse_sd, g.ssim_mean, g.ssim_sd);
    md += buf;
  }
  write_text_atomic(dir / "patterns.csv", csv);
  write_text_atomic(dir / "patterns.md", md);
  manifest.add(dir / "patterns_samples.csv");
  manifest.add(dir / "patterns.csv");
  manifest.add(dir / "patterns.md");
  manifest.write();
  return report;
}

SweepAxis parse_axis(const std::string &name) {
  if (name == "snr") {
    return SweepAxis::Snr;
  }
  if (name == "accel") {
    return SweepAxis::Accel;
  }
  if (name == "crop") {
    return SweepAxis::Crop;
  }
  throw ConfigError("unknown sweep axis '" + name + "' (snr, accel, crop)");
}

std::string axis_name(SweepAxis a) {
  switch (a) {
  case SweepAxis::Snr:
    return "snr";
  case SweepAxis::Accel:
    return "accel";
  case SweepAxis::Crop:
    return "crop";
  }
  return "?";
}

MetricReport cmd_sweep(const ExperimentConfig &cfg, SweepAxis axis, const ModelSpec &model) {
  RunManifest manifest(cfg, "sweep");
  const nn::UNetParams net = load_model(cfg, model);
  const TrajectorySpec base = cfg.trajectory_for(model.pattern);
  const std::string pname(pattern_name(model.pattern));
  const std::string aname = axis_name(axis);
  MetricReport report;
  auto record = [&](const Cine &out, const Cine &truth, const PhantomSpec &ph, CropShift shift, std::size_t index,
                    const std::string &method, double value, double seconds) {
    MetricRow row = evaluate(out, truth, ph, shift, cfg);
    row.method = method;
    row.pattern = pname;
    row.sweep_axis = aname;
    row.sweep_value = value;
    row.sample = index;
    row.wall_time_s = seconds;
    report.add(row);
  };
  for (std::size_t index : test_indices(cfg)) {
    if (axis == SweepAxis::Snr) {
      const PairedSample s = build_sample(index, base, cfg.seed, cfg.dataset);
      {
        auto [out, t] = timed([&] { return nn::unet_forward(net, s.aliased); });
        record(out, s.truth, s.phantom, s.shift, index, "unet", std::numeric_limits<double>::infinity(), t);
      }
      for (std::size_t k = 0; k < cfg.sweeps.snr_db.size(); ++k) {
        const double snr = cfg.sweeps.snr_db[k];
        const std::uint64_t noise_seed = Rng::stream(cfg.seed, "snr-sweep", index * 1000 + k).next();
        const Cine noisy = add_noise_to_snr(s.aliased, snr, noise_seed, cfg.sweeps.snr_convention);
        auto [out, t] = timed([&] { return nn::unet_forward(net, noisy); });
        record(out, s.truth, s.phantom, s.shift, index, "unet", snr, t);
      }
    } else if (axis == SweepAxis::Accel) {
      for (double a : cfg.sweeps.accel) {
        const PairedSample s = build_sample(index, with_acceleration(base, a), cfg.seed, cfg.dataset);
        auto [out, t] = timed([&] { return nn::unet_forward(net, s.aliased); });
        record(out, s.truth, s.phantom, s.shift, index, "unet", a, t);
        record(s.aliased, s.truth, s.phantom, s.shift, index, "aliased", a, 0.0);
      }
    } else {
      const NativeSample n = build_native(index, base, cfg.seed, cfg.dataset);
      for (int dy : cfg.sweeps.crop_offsets) {
        for (int dx : cfg.sweeps.crop_offsets) {
          const CropShift shift{dy, dx};
          const Cine truth = to_network_grid(n.truth, cfg.dataset, shift);
          const Cine aliased = to_network_grid(n.aliased, cfg.dataset, shift);
          auto [out, t] = timed([&] { return nn::unet_forward(net, aliased); });
          // Encode the shift as dy * 1000 + dx so rows stay one-dimensional.
          record(out, truth, n.phantom, shift, index, "unet", dy * 1000.0 + dx, t);
        }
      }
    }
  }
  const fs::path dir = fs::path(cfg.output_dir) / "sweeps" / model_tag(model);
  fs::create_directories(dir);
  report.write_csv(dir / (aname + ".csv"));
  write_text_atomic(dir / (aname + "_summary.json"), report.summary_json().dump(2) + "\n");
  manifest.add(dir / (aname + ".csv"));
  manifest.add(dir / (aname + "_summary.json"));
  if (axis != SweepAxis::Crop) {
    std::vector<std::pair<double, double>> pts;
    for (const auto &g : report.summarize()) {
      if (g.method == "unet") {
        pts.emplace_back(g.sweep_value, g.ssim_mean);
      }
    }
    std::sort(pts.begin(), pts.end());
    const fs::path svg = dir / (aname + "_ssim.svg");
    write_svg_plot(svg, "U-Net SSIM vs " + aname, aname, "SSIM", pts);
    if (fs::exists(svg)) {
      manifest.add(svg);
    }
  }
  manifest.write(aname);
  return report;
}

std::vector<fs::path> cmd_export_frames(const fs::path &cine, const fs::path &out_dir, long row) {
  if (!fs::exists(cine)) {
    throw MissingArtifact("cine not found: " + cine.string());
  }
  const Cine c = load_cine(cine);
  const std::size_t r = row < 0 ? c.height() / 2 : static_cast<std::size_t>(row);
  return export_frames(c, out_dir, r);
}

} // namespace reconlab

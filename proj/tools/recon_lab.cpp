#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "reconlab/harness.hpp"

using namespace reconlab;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  int jobs = 0;
};

struct ModelFlags {
  std::string pattern = "TGA_ROT";
  std::string mode = "3d";
  std::string loss = "l2";
};

void add_common(CLI::App *sub, Common &c, bool config_required = true) {
  auto *opt = sub->add_option("--config", c.config, "experiment JSON");
  if (config_required) {
    opt->required();
  }
  sub->add_option("--set", c.sets, "override, e.g. train.epochs=40")->take_all();
  sub->add_option("--jobs", c.jobs, "worker thread cap")->check(CLI::PositiveNumber);
}

void add_model(CLI::App *sub, ModelFlags &m, bool pattern = true) {
  if (pattern) {
    sub->add_option("--pattern", m.pattern, "REG_NO_ROT, REG_ROT, TGA_NO_ROT, TGA_ROT (train also takes all)");
  }
  sub->add_option("--mode", m.mode, "3d or 2d")->check(CLI::IsMember({"3d", "2d"}));
  sub->add_option("--loss", m.loss, "l2 or l1")->check(CLI::IsMember({"l2", "l1", "L2", "L1"}));
}

nn::NetMode mode_of(const ModelFlags &m) { return m.mode == "2d" ? nn::NetMode::PerFrame : nn::NetMode::Spatiotemporal; }
nn::LossKind loss_of(const ModelFlags &m) {
  return (m.loss == "l1" || m.loss == "L1") ? nn::LossKind::L1 : nn::LossKind::L2;
}

ExperimentConfig load(const Common &c) {
  LoadOptions opts;
  opts.overrides = c.sets;
  if (const char *env = std::getenv("RECONLAB_SEED"); env != nullptr && *env != '\0') {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') {
      throw ConfigError(std::string("RECONLAB_SEED is not an integer: ") + env);
    }
    opts.seed = v;
  }
  if (c.jobs > 0) {
    omp_set_num_threads(c.jobs);
  }
  return load_config(c.config, opts);
}

void print_report(const MetricReport &r) {
  for (const auto &g : r.summarize()) {
    std::printf("%-8s %-10s", g.method.c_str(), g.pattern.c_str());
    if (!g.sweep_axis.empty()) {
      std::printf(" %s=%-8g", g.sweep_axis.c_str(), g.sweep_value);
    }
    std::printf(" n=%zu rmse=%.4f+-%.4f ssim=%.4f+-%.4f time=%.3fs\n", g.n, g.rmse_mean, g.rmse_sd, g.ssim_mean,
                g.ssim_sd, g.wall_time_mean_s);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"recon-lab: radial cine MRI reconstruction experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common c;
  ModelFlags mf;
  std::vector<std::string> methods;
  bool png = false;
  std::size_t max_samples = 0;
  std::string axis;
  std::string input, out_dir;
  long row = -1;

  auto *make = app.add_subcommand("make-dataset", "generate paired truth/aliased datasets");
  add_common(make, c);
  auto *train = app.add_subcommand("train", "train a residual U-Net");
  add_common(train, c);
  add_model(train, mf);
  auto *recon = app.add_subcommand("recon", "reconstruct the test split and score it");
  add_common(recon, c);
  add_model(recon, mf);
  recon->add_option("--method", methods, "grid, grasp, unet (repeatable; default all)")
      ->check(CLI::IsMember({"grid", "grasp", "unet"}));
  recon->add_flag("--png", png, "also dump PNG frames");
  recon->add_option("--max-samples", max_samples, "limit test samples (0 = all)");
  auto *compare = app.add_subcommand("compare-patterns", "score the four pattern nets");
  add_common(compare, c);
  add_model(compare, mf, false);
  auto *sweep = app.add_subcommand("sweep", "robustness sweep of a trained net");
  add_common(sweep, c);
  add_model(sweep, mf);
  sweep->add_option("--axis", axis, "snr, accel or crop")->required()->check(CLI::IsMember({"snr", "accel", "crop"}));
  auto *exp = app.add_subcommand("export-frames", "write PNG frames and an x-t image of a cine");
  add_common(exp, c, false);
  exp->add_option("--input", input, "RCT1 cine")->required();
  exp->add_option("--out", out_dir, "output directory")->required();
  exp->add_option("--row", row, "x-t row (default: middle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*exp) {
      if (c.jobs > 0) {
        omp_set_num_threads(c.jobs);
      }
      const auto files = cmd_export_frames(input, out_dir, row);
      std::printf("wrote %zu images to %s\n", files.size(), out_dir.c_str());
      return 0;
    }
    const ExperimentConfig cfg = load(c);
    if (*make) {
      for (const auto &root : cmd_make_dataset(cfg)) {
        std::printf("dataset %s\n", root.string().c_str());
      }
    } else if (*train) {
      std::vector<Pattern> pats;
      if (mf.pattern == "all") {
        pats = cfg.patterns;
      } else {
        pats.push_back(parse_pattern(mf.pattern));
      }
      for (Pattern p : pats) {
        const ModelSpec spec{p, mode_of(mf), loss_of(mf)};
        const auto o = cmd_train(cfg, spec);
        std::printf("%s: loss %.6g -> %.6g, checkpoint %s\n", model_tag(spec).c_str(), o.loss_history.front(),
                    o.loss_history.back(), o.checkpoint.string().c_str());
      }
    } else if (*recon) {
      ReconOptions opts;
      opts.model = ModelSpec{parse_pattern(mf.pattern), mode_of(mf), loss_of(mf)};
      if (!methods.empty()) {
        opts.methods.clear();
        for (const auto &m : methods) {
          opts.methods.push_back(parse_method(m));
        }
      }
      opts.png = png;
      opts.max_samples = max_samples;
      print_report(cmd_recon(cfg, opts));
    } else if (*compare) {
      print_report(cmd_compare_patterns(cfg, mode_of(mf), loss_of(mf)));
    } else if (*sweep) {
      print_report(cmd_sweep(cfg, parse_axis(axis), ModelSpec{parse_pattern(mf.pattern), mode_of(mf), loss_of(mf)}));
    }
    return 0;
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const MissingArtifact &e) {
    std::fprintf(stderr, "missing artifact: %s\n", e.what());
    return 3;
  } catch (const NumericalError &e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

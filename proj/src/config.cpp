#include "reconlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "reconlab/rng.hpp"

namespace reconlab {

namespace {

nlohmann::json trajectory_json(const TrajectorySpec &t) {
  return {{"pattern", pattern_name(t.pattern)},
          {"spokes_per_frame", t.spokes_per_frame},
          {"full_spokes", t.full_spokes},
          {"tga_index", t.tga_index},
          {"phase_offset_deg", t.phase_offset_deg}};
}

std::string type_name(const nlohmann::json &j) {
  if (j.is_number_float()) {
    return "number";
  }
  if (j.is_number_unsigned()) {
    return "non-negative integer";
  }
  if (j.is_number_integer()) {
    return "integer";
  }
  return j.type_name();
}

void check_schema(const nlohmann::json &raw, const nlohmann::json &schema, const std::string &path) {
  const std::string where = path.empty() ? "<root>" : path;
  auto fail = [&](const std::string &what) { throw ConfigError(where + ": " + what); };
  if (schema.is_object()) {
    if (!raw.is_object()) {
      fail("expected an object, got " + type_name(raw));
    }
    for (auto it = raw.begin(); it != raw.end(); ++it) {
      const std::string sub = path.empty() ? it.key() : path + "." + it.key();
      if (!schema.contains(it.key())) {
        throw ConfigError("unknown key '" + sub + "'");
      }
      check_schema(it.value(), schema.at(it.key()), sub);
    }
  } else if (schema.is_array()) {
    if (!raw.is_array()) {
      fail("expected an array, got " + type_name(raw));
    }
    if (!schema.empty()) {
      for (std::size_t i = 0; i < raw.size(); ++i) {
        check_schema(raw[i], schema[0], path + "[" + std::to_string(i) + "]");
      }
    }
  } else if (schema.is_number_unsigned()) {
    if (!raw.is_number_integer() || (!raw.is_number_unsigned() && raw.get<std::int64_t>() < 0)) {
      fail("expected a non-negative integer, got " + type_name(raw));
    }
  } else if (schema.is_number_integer()) {
    if (!raw.is_number_integer()) {
      fail("expected an integer, got " + type_name(raw));
    }
  } else if (schema.is_number_float()) {
    if (!raw.is_number()) {
      fail("expected a number, got " + type_name(raw));
    }
  } else if (schema.is_string()) {
    if (!raw.is_string()) {
      fail("expected a string, got " + type_name(raw));
    }
  } else if (schema.is_boolean()) {
    if (!raw.is_boolean()) {
      fail("expected true/false, got " + type_name(raw));
    }
  }
}

std::string snr_convention_name(SnrConvention c) { return c == SnrConvention::Power ? "power" : "amplitude"; }

} // namespace

TrajectorySpec ExperimentConfig::trajectory_for(Pattern pattern) const {
  TrajectorySpec t = trajectory;
  t.pattern = pattern;
  t.readout_len = dataset.matrix;
  t.readout_oversampling = dataset.readout_oversampling;
  return t;
}

void ExperimentConfig::validate() const {
  dataset.validate();
  trajectory_for(trajectory.pattern).validate();
  unet.validate();
  train.validate();
  grasp.validate();
  if (patterns.empty()) {
    throw ConfigError("dataset.patterns must name at least one pattern");
  }
  if (unet.frames != dataset.frames) {
    throw ConfigError("unet.frames (" + std::to_string(unet.frames) + ") must equal dataset.frames (" +
                      std::to_string(dataset.frames) + ")");
  }
  const std::size_t div = std::size_t{1} << (unet.levels - 1);
  if (dataset.crop % div != 0) {
    throw ConfigError("dataset.crop must be divisible by 2^(unet.levels - 1) = " + std::to_string(div));
  }
  if (metrics.profile_length < 8) {
    throw ConfigError("metrics.profile_length must be >= 8");
  }
  if (dataset.crop < metrics.ssim.window) {
    throw ConfigError("dataset.crop is smaller than the SSIM window");
  }
  if (output_dir.empty()) {
    throw ConfigError("output_dir must not be empty");
  }
}

nlohmann::json to_json(const ExperimentConfig &cfg) {
  nlohmann::json ds = cfg.dataset;
  nlohmann::json pats = nlohmann::json::array();
  for (auto p : cfg.patterns) {
    pats.push_back(pattern_name(p));
  }
  ds["patterns"] = pats;
  return {{"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"dataset", ds},
          {"trajectory", trajectory_json(cfg.trajectory)},
          {"unet", cfg.unet},
          {"train", cfg.train},
          {"grasp", cfg.grasp},
          {"metrics",
           {{"ssim_window", cfg.metrics.ssim.window},
            {"ssim_sigma", cfg.metrics.ssim.sigma},
            {"ssim_k1", cfg.metrics.ssim.k1},
            {"ssim_k2", cfg.metrics.ssim.k2},
            {"ssim_range", cfg.metrics.ssim.range},
            {"profile_length", cfg.metrics.profile_length}}},
          {"sweeps",
           {{"snr_db", cfg.sweeps.snr_db},
            {"accel", cfg.sweeps.accel},
            {"crop_offsets", cfg.sweeps.crop_offsets},
            {"snr_convention", snr_convention_name(cfg.sweeps.snr_convention)},
            {"max_samples", cfg.sweeps.max_samples}}}};
}

ExperimentConfig parse_config(const nlohmann::json &raw) {
  const ExperimentConfig defaults;
  check_schema(raw, to_json(defaults), "");
  ExperimentConfig c;
  try {
    c.seed = raw.value("seed", c.seed);
    c.output_dir = raw.value("output_dir", c.output_dir);
    if (raw.contains("dataset")) {
      nlohmann::json ds = raw.at("dataset");
      if (ds.contains("patterns")) {
        c.patterns.clear();
        for (const auto &p : ds.at("patterns")) {
          const auto name = p.get<std::string>();
          if (name == "all") {
            c.patterns.assign(std::begin(kAllPatterns), std::end(kAllPatterns));
          } else {
            c.patterns.push_back(parse_pattern(name));
          }
        }
        ds.erase("patterns");
      }
      c.dataset = ds.get<DatasetConfig>();
    }
    if (raw.contains("trajectory")) {
      c.trajectory = raw.at("trajectory").get<TrajectorySpec>();
    }
    if (raw.contains("unet")) {
      c.unet = raw.at("unet").get<nn::UNetConfig>();
    }
    // The network's frame count follows the dataset unless given explicitly.
    if (!raw.contains("unet") || !raw.at("unet").contains("frames")) {
      c.unet.frames = c.dataset.frames;
    }
    if (raw.contains("train")) {
      c.train = raw.at("train").get<nn::TrainConfig>();
    }
    c.train.seed = c.seed;
    if (raw.contains("grasp")) {
      c.grasp = raw.at("grasp").get<GraspConfig>();
    }
    if (raw.contains("metrics")) {
      const auto &m = raw.at("metrics");
      c.metrics.ssim.window = m.value("ssim_window", c.metrics.ssim.window);
      c.metrics.ssim.sigma = m.value("ssim_sigma", c.metrics.ssim.sigma);
      c.metrics.ssim.k1 = m.value("ssim_k1", c.metrics.ssim.k1);
      c.metrics.ssim.k2 = m.value("ssim_k2", c.metrics.ssim.k2);
      c.metrics.ssim.range = m.value("ssim_range", c.metrics.ssim.range);
      c.metrics.profile_length = m.value("profile_length", c.metrics.profile_length);
    }
    if (raw.contains("sweeps")) {
      const auto &s = raw.at("sweeps");
      c.sweeps.snr_db = s.value("snr_db", c.sweeps.snr_db);
      c.sweeps.accel = s.value("accel", c.sweeps.accel);
      c.sweeps.crop_offsets = s.value("crop_offsets", c.sweeps.crop_offsets);
      c.sweeps.max_samples = s.value("max_samples", c.sweeps.max_samples);
      const std::string conv = s.value("snr_convention", std::string("amplitude"));
      if (conv == "amplitude") {
        c.sweeps.snr_convention = SnrConvention::Amplitude;
      } else if (conv == "power") {
        c.sweeps.snr_convention = SnrConvention::Power;
      } else {
        throw ConfigError("sweeps.snr_convention must be amplitude or power");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

void apply_override(nlohmann::json &raw, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    value = text;
  }
  nlohmann::json *node = &raw;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) {
      throw ConfigError("empty path segment in override '" + assignment + "'");
    }
    if (!node->is_object()) {
      if (!node->is_null()) {
        throw ConfigError("override '" + key + "' descends into a non-object");
      }
      *node = nlohmann::json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) {
      break;
    }
    start = dot + 1;
  }
  *node = value;
}

ExperimentConfig load_config(const std::filesystem::path &path, const LoadOptions &opts) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  nlohmann::json raw = nlohmann::json::parse(in, nullptr, false, true);
  if (raw.is_discarded()) {
    throw ConfigError("config " + path.string() + " is not valid JSON");
  }
  for (const auto &o : opts.overrides) {
    apply_override(raw, o);
  }
  if (opts.seed) {
    raw["seed"] = *opts.seed;
  }
  return parse_config(raw);
}

std::uint64_t config_hash(const ExperimentConfig &cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("output_dir");
  return fnv1a64(j.dump());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace reconlab

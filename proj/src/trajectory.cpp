#include "reconlab/trajectory.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "reconlab/errors.hpp"

namespace reconlab {

namespace {

double wrap180(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) {
    a += 180.0;
  }
  // fmod can return exactly 180 after the negative fix-up for tiny negatives.
  return a >= 180.0 ? 0.0 : a;
}

} // namespace

std::string_view pattern_name(Pattern p) {
  switch (p) {
  case Pattern::RegNoRot:
    return "REG_NO_ROT";
  case Pattern::RegRot:
    return "REG_ROT";
  case Pattern::TgaNoRot:
    return "TGA_NO_ROT";
  case Pattern::TgaRot:
    return "TGA_ROT";
  }
  return "?";
}

Pattern parse_pattern(std::string_view name) {
  for (auto p : kAllPatterns) {
    if (pattern_name(p) == name) {
      return p;
    }
  }
  throw ConfigError("unknown sampling pattern '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  if (spokes_per_frame < 1) {
    throw ConfigError("trajectory.spokes_per_frame must be >= 1");
  }
  if (full_spokes < spokes_per_frame) {
    throw ConfigError("trajectory.full_spokes must be >= spokes_per_frame");
  }
  if (readout_len < 2) {
    throw ConfigError("trajectory.readout_len must be >= 2");
  }
  if (tga_index < 1) {
    throw ConfigError("trajectory.tga_index must be >= 1");
  }
}

void to_json(nlohmann::json &j, const TrajectorySpec &s) {
  j = nlohmann::json{{"pattern", pattern_name(s.pattern)},
                     {"spokes_per_frame", s.spokes_per_frame},
                     {"full_spokes", s.full_spokes},
                     {"readout_len", s.readout_len},
                     {"tga_index", s.tga_index},
                     {"phase_offset_deg", s.phase_offset_deg},
                     {"readout_oversampling", s.readout_oversampling}};
}

void from_json(const nlohmann::json &j, TrajectorySpec &s) {
  s = TrajectorySpec{};
  if (j.contains("pattern")) {
    s.pattern = parse_pattern(j.at("pattern").get<std::string>());
  }
  s.spokes_per_frame = j.value("spokes_per_frame", s.spokes_per_frame);
  s.full_spokes = j.value("full_spokes", s.full_spokes);
  s.readout_len = j.value("readout_len", s.readout_len);
  s.tga_index = j.value("tga_index", s.tga_index);
  s.phase_offset_deg = j.value("phase_offset_deg", s.phase_offset_deg);
  s.readout_oversampling = j.value("readout_oversampling", s.readout_oversampling);
}

double tiny_golden_angle(unsigned order) {
  if (order == 0) {
    throw ConfigError("tiny golden angle order must be >= 1");
  }
  return 180.0 / (std::numbers::phi + static_cast<double>(order) - 1.0);
}

std::vector<double> spoke_angles(const TrajectorySpec &spec, std::size_t frame) {
  spec.validate();
  const std::size_t n = spec.spokes_per_frame;
  std::vector<double> angles(n);
  const double regular_step = 180.0 / static_cast<double>(n);
  switch (spec.pattern) {
  case Pattern::RegNoRot:
    for (std::size_t k = 0; k < n; ++k) {
      angles[k] = k * regular_step;
    }
    break;
  case Pattern::RegRot: {
    const double frame_step = 180.0 / (static_cast<double>(n) * spec.acceleration());
    for (std::size_t k = 0; k < n; ++k) {
      angles[k] = k * regular_step + static_cast<double>(frame) * frame_step;
    }
    break;
  }
  case Pattern::TgaNoRot: {
    const double psi = tiny_golden_angle(spec.tga_index);
    for (std::size_t k = 0; k < n; ++k) {
      angles[k] = static_cast<double>(k) * psi;
    }
    break;
  }
  case Pattern::TgaRot: {
    const double psi = tiny_golden_angle(spec.tga_index);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t global = static_cast<std::uint64_t>(frame) * n + k;
      angles[k] = static_cast<double>(global) * psi;
    }
    break;
  }
  }
  for (auto &a : angles) {
    a = wrap180(a + spec.phase_offset_deg);
  }
  return angles;
}

SpokeSet spokes_from_angles(std::vector<double> angles_deg, std::size_t samples_per_spoke) {
  if (samples_per_spoke < 2) {
    throw ConfigError("readout length must be >= 2");
  }
  SpokeSet set;
  set.samples_per_spoke = samples_per_spoke;
  set.kx.resize(angles_deg.size() * samples_per_spoke);
  set.ky.resize(set.kx.size());
  const double step = 1.0 / static_cast<double>(samples_per_spoke - 1);
  for (std::size_t s = 0; s < angles_deg.size(); ++s) {
    const double theta = angles_deg[s] * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    for (std::size_t m = 0; m < samples_per_spoke; ++m) {
      // Symmetric construction keeps the centre sample exactly at 0 for odd lengths.
      const double r = (static_cast<double>(2 * m) - static_cast<double>(samples_per_spoke - 1)) * 0.5 * step;
      set.kx[s * samples_per_spoke + m] = r * c;
      set.ky[s * samples_per_spoke + m] = r * sn;
    }
  }
  set.angles_deg = std::move(angles_deg);
  return set;
}

SpokeSet spoke_coordinates(const TrajectorySpec &spec, std::size_t frame) {
  return spokes_from_angles(spoke_angles(spec, frame), spec.samples_per_spoke());
}

TrajectorySpec with_acceleration(TrajectorySpec spec, double acceleration) {
  if (!(acceleration >= 1.0)) {
    throw ConfigError("acceleration must be >= 1");
  }
  const double spokes = std::round(static_cast<double>(spec.full_spokes) / acceleration);
  spec.spokes_per_frame = static_cast<std::size_t>(std::max(1.0, spokes));
  return spec;
}

} // namespace reconlab

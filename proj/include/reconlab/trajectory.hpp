#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace reconlab {

enum class Pattern { RegNoRot, RegRot, TgaNoRot, TgaRot };

inline constexpr Pattern kAllPatterns[] = {Pattern::RegNoRot, Pattern::RegRot, Pattern::TgaNoRot,
                                           Pattern::TgaRot};

std::string_view pattern_name(Pattern p);
Pattern parse_pattern(std::string_view name);

struct TrajectorySpec {
  Pattern pattern = Pattern::TgaRot;
  std::size_t spokes_per_frame = 14;
  std::size_t full_spokes = 182;
  std::size_t readout_len = 192;
  unsigned tga_index = 7;
  // Rotation applied to every angle; the regular schemes start at 0 by default.
  double phase_offset_deg = 0.0;
  // Doubles the readout sample count over the same k-space extent.
  bool readout_oversampling = false;

  double acceleration() const {
    return static_cast<double>(full_spokes) / static_cast<double>(spokes_per_frame);
  }
  std::size_t samples_per_spoke() const { return readout_oversampling ? 2 * readout_len : readout_len; }
  void validate() const;

  friend bool operator==(const TrajectorySpec &, const TrajectorySpec &) = default;
};

void to_json(nlohmann::json &j, const TrajectorySpec &s);
void from_json(const nlohmann::json &j, TrajectorySpec &s);

// Radial sample coordinates of one frame, normalized to [-0.5, 0.5] cycles/pixel.
struct SpokeSet {
  std::vector<double> angles_deg;
  std::size_t samples_per_spoke = 0;
  // spoke-major: index = spoke * samples_per_spoke + m
  std::vector<double> kx;
  std::vector<double> ky;

  std::size_t spokes() const { return angles_deg.size(); }
  std::size_t size() const { return kx.size(); }
};

// 180 / (tau + N - 1) degrees, tau the golden ratio.
double tiny_golden_angle(unsigned order);

std::vector<double> spoke_angles(const TrajectorySpec &spec, std::size_t frame);

SpokeSet spoke_coordinates(const TrajectorySpec &spec, std::size_t frame);
// Coordinates for an explicit angle list.
SpokeSet spokes_from_angles(std::vector<double> angles_deg, std::size_t samples_per_spoke);

// Spec with spokes_per_frame = round(full_spokes / acceleration).
TrajectorySpec with_acceleration(TrajectorySpec spec, double acceleration);

} // namespace reconlab

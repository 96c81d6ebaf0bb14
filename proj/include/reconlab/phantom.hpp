#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reconlab/tensor.hpp"

namespace reconlab {

struct Ellipse {
  double cy = 0.0; // centre offset from image centre, fraction of matrix
  double cx = 0.0;
  double ry = 0.1; // semi-axes, fraction of matrix
  double rx = 0.1;
  double angle_deg = 0.0;
  double intensity = 0.5;
};

// Procedural cardiac-like cine: a bright myocardial ring around a mid-intensity
// blood pool whose radius follows one contraction cycle, a few bright
// papillary dots, and static background ellipses inside a body outline.
// Lengths are fractions of `matrix` so the same spec renders at any size.
struct PhantomSpec {
  std::uint64_t seed = 0;
  std::size_t matrix = 240;
  double rr_ms = 900.0;
  double source_dt_ms = 32.0;
  std::size_t n_structures = 6;
  std::vector<Ellipse> background;

  double body_ry = 0.40;
  double body_rx = 0.46;
  double body_intensity = 0.22;

  double center_y = 0.0;
  double center_x = 0.0;
  double outer_radius = 0.10; // diastolic epicardial radius
  double inner_radius = 0.07; // diastolic endocardial radius
  double contraction = 0.35;  // fractional endocardial radius change at systole
  double systole_phase = 0.35;
  double myocardium_intensity = 0.85;
  double blood_intensity = 0.5;

  std::size_t papillary_count = 2;
  double papillary_radius = 0.012;
  double papillary_intensity = 1.0;
  std::vector<double> papillary_angles_deg;

  double breathing_amplitude_px = 0.0;
  double breathing_period_ms = 4000.0;

  std::size_t source_frames() const;
  void validate() const;
};

void to_json(nlohmann::json &j, const PhantomSpec &s);
void from_json(const nlohmann::json &j, PhantomSpec &s);
void to_json(nlohmann::json &j, const Ellipse &e);
void from_json(const nlohmann::json &j, Ellipse &e);

// Ranges sampled by random_phantom_spec.
struct PhantomRanges {
  std::size_t matrix = 240;
  double rr_min_ms = 600.0;
  double rr_max_ms = 1200.0;
  std::size_t n_structures = 6;
  double outer_radius_min = 0.085;
  double outer_radius_max = 0.11;
  double wall_ratio_min = 0.62; // inner / outer at diastole
  double wall_ratio_max = 0.74;
  double contraction_min = 0.25;
  double contraction_max = 0.45;
  std::size_t papillary_min = 2;
  std::size_t papillary_max = 4;
  double breathing_amplitude_px = 0.0;
};

void to_json(nlohmann::json &j, const PhantomRanges &r);
void from_json(const nlohmann::json &j, PhantomRanges &r);

PhantomSpec random_phantom_spec(std::uint64_t seed, std::uint64_t index, const PhantomRanges &ranges);

// Endocardial radius (fraction of matrix) at cycle phase in [0, 1).
double endocardial_radius(const PhantomSpec &spec, double phase);

Cine generate_phantom(const PhantomSpec &spec);

} // namespace reconlab

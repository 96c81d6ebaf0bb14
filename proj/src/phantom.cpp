#include "reconlab/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "reconlab/rng.hpp"

namespace reconlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Anti-aliased coverage of a shape given signed distance (pixels, negative inside).
double coverage(double signed_distance) { return std::clamp(0.5 - signed_distance, 0.0, 1.0); }

void blend(float &dst, double value, double alpha) {
  if (alpha > 0.0) {
    dst = static_cast<float>(dst * (1.0 - alpha) + value * alpha);
  }
}

} // namespace

void to_json(nlohmann::json &j, const Ellipse &e) {
  j = {{"cy", e.cy}, {"cx", e.cx}, {"ry", e.ry}, {"rx", e.rx}, {"angle_deg", e.angle_deg},
       {"intensity", e.intensity}};
}

void from_json(const nlohmann::json &j, Ellipse &e) {
  e.cy = j.at("cy");
  e.cx = j.at("cx");
  e.ry = j.at("ry");
  e.rx = j.at("rx");
  e.angle_deg = j.at("angle_deg");
  e.intensity = j.at("intensity");
}

void to_json(nlohmann::json &j, const PhantomSpec &s) {
  j = {{"seed", s.seed},
       {"matrix", s.matrix},
       {"rr_ms", s.rr_ms},
       {"source_dt_ms", s.source_dt_ms},
       {"n_structures", s.n_structures},
       {"background", s.background},
       {"body_ry", s.body_ry},
       {"body_rx", s.body_rx},
       {"body_intensity", s.body_intensity},
       {"center_y", s.center_y},
       {"center_x", s.center_x},
       {"outer_radius", s.outer_radius},
       {"inner_radius", s.inner_radius},
       {"contraction", s.contraction},
       {"systole_phase", s.systole_phase},
       {"myocardium_intensity", s.myocardium_intensity},
       {"blood_intensity", s.blood_intensity},
       {"papillary_count", s.papillary_count},
       {"papillary_radius", s.papillary_radius},
       {"papillary_intensity", s.papillary_intensity},
       {"papillary_angles_deg", s.papillary_angles_deg},
       {"breathing_amplitude_px", s.breathing_amplitude_px},
       {"breathing_period_ms", s.breathing_period_ms}};
}

void from_json(const nlohmann::json &j, PhantomSpec &s) {
  s = PhantomSpec{};
  s.seed = j.value("seed", s.seed);
  s.matrix = j.value("matrix", s.matrix);
  s.rr_ms = j.value("rr_ms", s.rr_ms);
  s.source_dt_ms = j.value("source_dt_ms", s.source_dt_ms);
  s.n_structures = j.value("n_structures", s.n_structures);
  if (j.contains("background")) {
    s.background = j.at("background").get<std::vector<Ellipse>>();
  }
  s.body_ry = j.value("body_ry", s.body_ry);
  s.body_rx = j.value("body_rx", s.body_rx);
  s.body_intensity = j.value("body_intensity", s.body_intensity);
  s.center_y = j.value("center_y", s.center_y);
  s.center_x = j.value("center_x", s.center_x);
  s.outer_radius = j.value("outer_radius", s.outer_radius);
  s.inner_radius = j.value("inner_radius", s.inner_radius);
  s.contraction = j.value("contraction", s.contraction);
  s.systole_phase = j.value("systole_phase", s.systole_phase);
  s.myocardium_intensity = j.value("myocardium_intensity", s.myocardium_intensity);
  s.blood_intensity = j.value("blood_intensity", s.blood_intensity);
  s.papillary_count = j.value("papillary_count", s.papillary_count);
  s.papillary_radius = j.value("papillary_radius", s.papillary_radius);
  s.papillary_intensity = j.value("papillary_intensity", s.papillary_intensity);
  if (j.contains("papillary_angles_deg")) {
    s.papillary_angles_deg = j.at("papillary_angles_deg").get<std::vector<double>>();
  }
  s.breathing_amplitude_px = j.value("breathing_amplitude_px", s.breathing_amplitude_px);
  s.breathing_period_ms = j.value("breathing_period_ms", s.breathing_period_ms);
}

void to_json(nlohmann::json &j, const PhantomRanges &r) {
  j = {{"matrix", r.matrix},
       {"rr_min_ms", r.rr_min_ms},
       {"rr_max_ms", r.rr_max_ms},
       {"n_structures", r.n_structures},
       {"outer_radius_min", r.outer_radius_min},
       {"outer_radius_max", r.outer_radius_max},
       {"wall_ratio_min", r.wall_ratio_min},
       {"wall_ratio_max", r.wall_ratio_max},
       {"contraction_min", r.contraction_min},
       {"contraction_max", r.contraction_max},
       {"papillary_min", r.papillary_min},
       {"papillary_max", r.papillary_max},
       {"breathing_amplitude_px", r.breathing_amplitude_px}};
}

void from_json(const nlohmann::json &j, PhantomRanges &r) {
  r = PhantomRanges{};
  r.matrix = j.value("matrix", r.matrix);
  r.rr_min_ms = j.value("rr_min_ms", r.rr_min_ms);
  r.rr_max_ms = j.value("rr_max_ms", r.rr_max_ms);
  r.n_structures = j.value("n_structures", r.n_structures);
  r.outer_radius_min = j.value("outer_radius_min", r.outer_radius_min);
  r.outer_radius_max = j.value("outer_radius_max", r.outer_radius_max);
  r.wall_ratio_min = j.value("wall_ratio_min", r.wall_ratio_min);
  r.wall_ratio_max = j.value("wall_ratio_max", r.wall_ratio_max);
  r.contraction_min = j.value("contraction_min", r.contraction_min);
  r.contraction_max = j.value("contraction_max", r.contraction_max);
  r.papillary_min = j.value("papillary_min", r.papillary_min);
  r.papillary_max = j.value("papillary_max", r.papillary_max);
  r.breathing_amplitude_px = j.value("breathing_amplitude_px", r.breathing_amplitude_px);
}

std::size_t PhantomSpec::source_frames() const {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(rr_ms / source_dt_ms)));
}

void PhantomSpec::validate() const {
  if (matrix < 8) {
    throw ConfigError("phantom matrix must be >= 8");
  }
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius)) {
    throw ConfigError("phantom radii must satisfy 0 < inner < outer");
  }
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw ConfigError("phantom contraction fraction must be in (0, 1)");
  }
  if (!(rr_ms > 0.0) || !(source_dt_ms > 0.0)) {
    throw ConfigError("phantom timing must be positive");
  }
  if (papillary_angles_deg.size() != papillary_count) {
    throw ConfigError("papillary angle list does not match papillary_count");
  }
}

PhantomSpec random_phantom_spec(std::uint64_t seed, std::uint64_t index, const PhantomRanges &r) {
  Rng rng = Rng::stream(seed, "phantom", index);
  PhantomSpec s;
  s.seed = seed ^ (index * 0x9e3779b97f4a7c15ULL);
  s.matrix = r.matrix;
  s.rr_ms = rng.uniform(r.rr_min_ms, r.rr_max_ms);
  s.n_structures = r.n_structures;
  s.outer_radius = rng.uniform(r.outer_radius_min, r.outer_radius_max);
  s.inner_radius = s.outer_radius * rng.uniform(r.wall_ratio_min, r.wall_ratio_max);
  s.contraction = rng.uniform(r.contraction_min, r.contraction_max);
  s.systole_phase = rng.uniform(0.25, 0.45);
  s.center_y = rng.uniform(-0.01, 0.01);
  s.center_x = rng.uniform(-0.01, 0.01);
  s.myocardium_intensity = rng.uniform(0.78, 0.92);
  s.blood_intensity = rng.uniform(0.42, 0.58);
  s.body_intensity = rng.uniform(0.16, 0.28);
  s.papillary_count = r.papillary_min + rng.below(r.papillary_max - r.papillary_min + 1);
  s.papillary_radius = rng.uniform(0.010, 0.014);
  const double first = rng.uniform(0.0, 360.0);
  for (std::size_t i = 0; i < s.papillary_count; ++i) {
    s.papillary_angles_deg.push_back(
        std::fmod(first + 360.0 * static_cast<double>(i) / s.papillary_count + rng.uniform(-20.0, 20.0), 360.0));
  }
  // Background structures sit inside the body but outside the heart.
  for (std::size_t i = 0; i < s.n_structures; ++i) {
    Ellipse e;
    double dist;
    do {
      e.cy = rng.uniform(-0.32, 0.32);
      e.cx = rng.uniform(-0.38, 0.38);
      dist = std::hypot(e.cy, e.cx);
    } while (dist < s.outer_radius + 0.08 || (e.cy / 0.34) * (e.cy / 0.34) + (e.cx / 0.4) * (e.cx / 0.4) > 1.0);
    e.ry = rng.uniform(0.025, 0.08);
    e.rx = rng.uniform(0.025, 0.08);
    e.angle_deg = rng.uniform(0.0, 180.0);
    e.intensity = rng.uniform(0.05, 0.65);
    s.background.push_back(e);
  }
  s.breathing_amplitude_px = r.breathing_amplitude_px;
  return s;
}

double endocardial_radius(const PhantomSpec &spec, double phase) {
  const double squeeze = 0.5 * (1.0 + std::cos(2.0 * kPi * (phase - spec.systole_phase)));
  return spec.inner_radius * (1.0 - spec.contraction * squeeze);
}

Cine generate_phantom(const PhantomSpec &spec) {
  spec.validate();
  const std::size_t n = spec.matrix;
  const std::size_t frames = spec.source_frames();
  const double dt = spec.rr_ms / static_cast<double>(frames);
  Cine cine(frames, n, n, dt);
  const double N = static_cast<double>(n);
  const double c0 = static_cast<double>(n / 2);
  const double wall_area = spec.outer_radius * spec.outer_radius - spec.inner_radius * spec.inner_radius;

  for (std::size_t t = 0; t < frames; ++t) {
    const double phase = static_cast<double>(t) / static_cast<double>(frames);
    const double shift_y =
        spec.breathing_amplitude_px * std::sin(2.0 * kPi * static_cast<double>(t) * dt / spec.breathing_period_ms);
    const double r_in = endocardial_radius(spec, phase) * N;
    // Myocardial area is conserved through the cycle.
    const double r_out = std::sqrt(r_in * r_in + wall_area * N * N);
    const double hy = c0 + spec.center_y * N + shift_y;
    const double hx = c0 + spec.center_x * N;

    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double py = static_cast<double>(y);
        const double px = static_cast<double>(x);
        float v = 0.0f;

        auto ellipse_alpha = [&](double cy, double cx, double ry, double rx, double angle_deg) {
          const double a = angle_deg * kPi / 180.0;
          const double dy = py - cy;
          const double dx = px - cx;
          const double u = dx * std::cos(a) + dy * std::sin(a);
          const double w = -dx * std::sin(a) + dy * std::cos(a);
          const double rho = std::sqrt((u / rx) * (u / rx) + (w / ry) * (w / ry));
          return coverage((rho - 1.0) * std::min(rx, ry));
        };

        blend(v, spec.body_intensity, ellipse_alpha(c0 + shift_y, c0, spec.body_ry * N, spec.body_rx * N, 0.0));
        for (const auto &e : spec.background) {
          blend(v, e.intensity,
                ellipse_alpha(c0 + e.cy * N + shift_y, c0 + e.cx * N, e.ry * N, e.rx * N, e.angle_deg));
        }
        const double d = std::hypot(py - hy, px - hx);
        blend(v, spec.myocardium_intensity, coverage(d - r_out));
        blend(v, spec.blood_intensity, coverage(d - r_in));
        for (double ang : spec.papillary_angles_deg) {
          const double a = ang * kPi / 180.0;
          const double dy = hy + 0.62 * r_in * std::sin(a);
          const double dx = hx + 0.62 * r_in * std::cos(a);
          blend(v, spec.papillary_intensity, coverage(std::hypot(py - dy, px - dx) - spec.papillary_radius * N));
        }
        cine.at(t, y, x) = v;
      }
    }
  }
  return cine;
}

} // namespace reconlab

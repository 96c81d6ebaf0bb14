#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "reconlab/datagen.hpp"
#include "reconlab/phantom.hpp"

using namespace reconlab;

namespace {

DatasetConfig small_config() {
  DatasetConfig c;
  c.matrix = 64;
  c.crop = 48;
  c.frames = 20;
  c.phantom.matrix = 80;
  return c;
}

double cine_rmse(const Cine &a, const Cine &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (a.values()[i] - b.values()[i]) * double(a.values()[i] - b.values()[i]);
  }
  return std::sqrt(s / a.size());
}

Cine ramp_cine(std::size_t t, std::size_t h, std::size_t w) {
  Cine c(t, h, w);
  for (std::size_t f = 0; f < t; ++f) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        c.at(f, y, x) = static_cast<float>(1000 * f + 10 * y + x);
      }
    }
  }
  return c;
}

} // namespace

TEST_CASE("phantom determinism and range") {
  const auto spec = random_phantom_spec(7, 3, PhantomRanges{});
  const Cine a = generate_phantom(spec);
  const Cine b = generate_phantom(random_phantom_spec(7, 3, PhantomRanges{}));
  CHECK(a == b);
  CHECK(a.frames() == spec.source_frames());
  CHECK(spec.source_frames() == static_cast<std::size_t>(std::lround(spec.rr_ms / 32.0)));
  for (float v : a.values()) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0f);
  }
  CHECK(!(generate_phantom(random_phantom_spec(7, 4, PhantomRanges{})) == a));
  CHECK(spec.papillary_count >= 2);
  CHECK(spec.papillary_count <= 4);
}

TEST_CASE("systolic pool area follows the contraction fraction") {
  PhantomSpec s;
  s.matrix = 240;
  s.rr_ms = 960.0; // 30 source frames
  s.systole_phase = 0.5;
  s.contraction = 0.3;
  s.n_structures = 0;
  s.background.clear();
  s.papillary_count = 0;
  s.papillary_angles_deg.clear();
  const Cine c = generate_phantom(s);
  REQUIRE(c.frames() == 30);
  // Fractional pool area from intensities between blood and myocardium.
  auto pool_area = [&](std::size_t t) {
    const double n = s.matrix, c0 = n / 2;
    // Stay inside the epicardium, which has conserved wall area.
    const double r_in = endocardial_radius(s, t / 30.0);
    const double wall = s.outer_radius * s.outer_radius - s.inner_radius * s.inner_radius;
    const double limit = std::sqrt(r_in * r_in + wall) * n - 2.0;
    double area = 0.0;
    for (std::size_t y = 0; y < s.matrix; ++y) {
      for (std::size_t x = 0; x < s.matrix; ++x) {
        if (std::hypot(y - c0, x - c0) > limit) {
          continue;
        }
        const double v = c.at(t, y, x);
        area += std::clamp((s.myocardium_intensity - v) / (s.myocardium_intensity - s.blood_intensity), 0.0, 1.0);
      }
    }
    return area;
  };
  const double ratio = pool_area(15) / pool_area(0);
  CHECK(ratio == doctest::Approx(0.7 * 0.7).epsilon(0.05));
}

TEST_CASE("static background without breathing") {
  auto spec = random_phantom_spec(1, 0, PhantomRanges{});
  REQUIRE(spec.breathing_amplitude_px == 0.0);
  const Cine c = generate_phantom(spec);
  // Corners lie outside the heart.
  for (std::size_t t = 1; t < c.frames(); ++t) {
    for (std::size_t y = 0; y < 20; ++y) {
      for (std::size_t x = 0; x < 20; ++x) {
        CHECK(c.at(t, y, x) == c.at(0, y, x));
      }
    }
  }
}

TEST_CASE("resample pipeline frame counts") {
  PhantomSpec s = random_phantom_spec(2, 0, PhantomRanges{});
  s.matrix = 40;
  s.rr_ms = 728.0;
  CHECK(resample_pipeline(generate_phantom(s), 728.0, 32).frames() == 20);
  s.rr_ms = 1000.0;
  const Cine r = resample_pipeline(generate_phantom(s), 1000.0, 32);
  CHECK(r.frames() == 27);
  CHECK(r.height() == 32);
  CHECK(r.frame_dt_ms() == doctest::Approx(36.4));
  CHECK_THROWS_AS(resample_pipeline(generate_phantom(s), 30.0, 32), ConfigError);

  Cine flat(10, 8, 8);
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t i = 0; i < 64; ++i) {
      flat.frame(t)[i] = 0.01f * i;
    }
  }
  const Cine fr = resample_pipeline(flat, 800.0, 12);
  for (std::size_t t = 1; t < fr.frames(); ++t) {
    for (std::size_t i = 0; i < fr.frame_size(); ++i) {
      CHECK(fr.frame(t)[i] == doctest::Approx(fr.frame(0)[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("crop_center indices") {
  const Cine c = ramp_cine(1, 192, 192);
  const Cine a = crop_center(c, 128);
  CHECK(a.at(0, 0, 0) == c.at(0, 32, 32));
  CHECK(a.at(0, 127, 127) == c.at(0, 159, 159));
  const Cine b = crop_center(c, 128, {12, 12});
  CHECK(b.at(0, 0, 0) == c.at(0, 44, 44));
  CHECK(b.at(0, 127, 127) == c.at(0, 171, 171));
  CHECK(crop_center(c, 128) == a);
  CHECK_THROWS_AS(crop_center(c, 128, {40, 0}), ShapeError);
}

TEST_CASE("interp_frames") {
  const Cine c = ramp_cine(20, 3, 3);
  CHECK(interp_frames(c, 20) == c);
  Cine two(2, 1, 2);
  two.at(0, 0, 0) = 1.0f;
  two.at(1, 0, 0) = 3.0f;
  two.at(0, 0, 1) = 5.0f;
  two.at(1, 0, 1) = 0.0f;
  const Cine i = interp_frames(two, 20);
  for (std::size_t j = 0; j < 20; ++j) {
    CHECK(i.at(j, 0, 0) == doctest::Approx(1.0 + 2.0 * j / 19.0));
    CHECK(i.at(j, 0, 1) == doctest::Approx(5.0 - 5.0 * j / 19.0));
  }
  CHECK(i.at(0, 0, 0) == 1.0f);
  CHECK(i.at(19, 0, 0) == 3.0f);
  // Monotone ramps stay monotone when downsampling too.
  const Cine d = interp_frames(ramp_cine(27, 2, 2), 20);
  for (std::size_t j = 1; j < 20; ++j) {
    CHECK(d.at(j, 1, 1) >= d.at(j - 1, 1, 1));
  }
  CHECK_THROWS_AS(interp_frames(Cine(1, 2, 2), 20), ShapeError);
}

TEST_CASE("paired samples") {
  const DatasetConfig cfg = small_config();
  TrajectorySpec traj;
  const auto ds = build_dataset(3, traj, 11, cfg);
  REQUIRE(ds.size() == 3);
  for (const auto &s : ds) {
    CHECK(s.truth.frames() == 20);
    CHECK(s.truth.height() == 48);
    CHECK(s.truth.same_shape(s.aliased));
    for (float v : s.truth.values()) {
      CHECK((v >= 0.0f && v <= 1.0f));
    }
    CHECK(*std::max_element(s.aliased.values().begin(), s.aliased.values().end()) == 1.0f);
    CHECK(cine_rmse(s.truth, s.aliased) > 0.0);
    REQUIRE(s.kspace.has_value());
    CHECK(s.kspace->frames == s.native_frames);
    CHECK(s.kspace->height == 64);
  }
  const auto again = build_dataset(3, traj, 11, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again[i].truth == ds[i].truth);
    CHECK(again[i].aliased == ds[i].aliased);
    CHECK(again[i].kspace->samples == ds[i].kspace->samples);
  }
  // Sample i does not depend on how many were generated.
  const auto one = build_dataset(1, traj, 11, cfg, 2);
  CHECK(one[0].aliased == ds[2].aliased);
}

TEST_CASE("pipeline order") {
  const DatasetConfig cfg = small_config();
  PipelineTrace trace;
  const auto s = build_sample(0, TrajectorySpec{}, 5, cfg, {4, -4}, &trace);
  const PipelineTrace expect{"generate_phantom",     "resample_pipeline",     "corrupt_cine",
                             "truth:crop_center",    "truth:interp_frames",   "truth:normalize01",
                             "aliased:crop_center",  "aliased:interp_frames", "aliased:normalize01"};
  CHECK(trace == expect);
  CHECK(s.shift == CropShift{4, -4});
  // Native-grid corruption: the radial data covers the native frame count and matrix.
  CHECK(s.kspace->frames == s.native_frames);
  CHECK(s.kspace->height == cfg.matrix);
  // The shared shift means the network-grid branches come from the same native window.
  const NativeSample n = build_native(0, TrajectorySpec{}, 5, cfg);
  CHECK(to_network_grid(n.truth, cfg, {4, -4}) == s.truth);
  CHECK(to_network_grid(n.aliased, cfg, {4, -4}) == s.aliased);
}

TEST_CASE("four patterns share the truth") {
  const DatasetConfig cfg = small_config();
  std::vector<PairedSample> per;
  for (Pattern p : kAllPatterns) {
    TrajectorySpec t;
    t.pattern = p;
    per.push_back(build_sample(1, t, 3, cfg));
  }
  for (std::size_t i = 1; i < per.size(); ++i) {
    CHECK(per[i].truth == per[0].truth);
    CHECK(!(per[i].aliased == per[0].aliased));
  }
}

TEST_CASE("acceleration raises aliasing error") {
  DatasetConfig cfg = small_config();
  TrajectorySpec t;
  const auto s13 = build_sample(0, t, 9, cfg);
  const auto s1 = build_sample(0, with_acceleration(t, 1.0), 9, cfg);
  CHECK(cine_rmse(s13.truth, s13.aliased) > cine_rmse(s1.truth, s1.aliased));
}

TEST_CASE("noise at a requested SNR") {
  const auto s = build_sample(0, TrajectorySpec{}, 2, small_config());
  const Cine &x = s.aliased;
  double ss = 0.0;
  for (float v : x.values()) {
    ss += double(v) * v;
  }
  const double rms = std::sqrt(ss / x.size());
  for (double snr : {20.0, 15.2, 10.0}) {
    // Unclamped noise measured by subtracting, so check on a raised copy where clamping never bites.
    Cine raised = x;
    for (auto &v : raised.values()) {
      v += 10.0f;
    }
    const Cine n = add_noise_to_snr(raised, snr, 99);
    const Cine p = add_noise_to_snr(raised, snr, 99, SnrConvention::Power);
    double nn = 0.0, np = 0.0, rs = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double d = double(n.values()[i]) - raised.values()[i];
      const double e = double(p.values()[i]) - raised.values()[i];
      nn += d * d;
      np += e * e;
      rs += double(raised.values()[i]) * raised.values()[i];
    }
    const double amp = 20.0 * std::log10(std::sqrt(rs / n.size()) / std::sqrt(nn / n.size()));
    const double pow = 10.0 * std::log10(std::sqrt(rs / n.size()) / std::sqrt(np / n.size()));
    CHECK(std::abs(amp - snr) < 0.1);
    CHECK(std::abs(pow - snr) < 0.1);
    CHECK(np < nn);
  }
  const Cine quiet = add_noise_to_snr(x, 200.0, 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(quiet.values()[i] - x.values()[i]) < 1e-6);
  }
  const Cine noisy = add_noise_to_snr(x, 10.0, 1);
  for (float v : noisy.values()) {
    CHECK(v >= 0.0f);
  }
  CHECK(add_noise_to_snr(x, 10.0, 1) == noisy);
  CHECK(rms > 0.0);
  CHECK_THROWS_AS(add_noise_to_snr(Cine(2, 2, 2), 10.0, 1), NumericalError);
}

TEST_CASE("dataset directory round trip") {
  const DatasetConfig cfg = small_config();
  auto ds = build_dataset(2, TrajectorySpec{}, 4, cfg);
  const auto root = std::filesystem::temp_directory_path() / "reconlab_tests" / "ds";
  std::filesystem::remove_all(root);
  save_sample(root, ds[0], "train");
  ds[1].kspace.reset();
  save_sample(root, ds[1], "test");
  CHECK(std::filesystem::exists(root / "sample_00000" / "truth.rct"));
  CHECK(std::filesystem::exists(root / "sample_00000" / "meta.json"));
  const auto test = load_dataset(root, "test");
  REQUIRE(test.size() == 1);
  CHECK(test[0].index == 1);
  CHECK(test[0].truth == ds[1].truth);
  CHECK(test[0].phantom.rr_ms == ds[1].phantom.rr_ms);
  const auto first = load_sample(root / "sample_00000", true);
  CHECK(first.aliased == ds[0].aliased);
  REQUIRE(first.kspace.has_value());
  CHECK(first.kspace->samples == ds[0].kspace->samples);
  CHECK(load_dataset(root).size() == 2);
}

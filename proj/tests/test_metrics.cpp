#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "reconlab/metrics.hpp"
#include "reconlab/phantom.hpp"
#include "reconlab/rng.hpp"

using namespace reconlab;
namespace fs = std::filesystem;

namespace {

Cine random_cine(std::size_t t, std::size_t h, std::size_t w, Rng &r) {
  Cine c(t, h, w);
  for (auto &v : c.values()) {
    v = static_cast<float>(r.uniform());
  }
  return c;
}

// Vertical edge at column 16 blurred by a Gaussian of the given width.
std::vector<float> edge_frame(double width, double gain = 1.0, double offset = 0.0) {
  std::vector<float> f(32 * 32);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const double s = 0.5 * (1.0 + std::erf((static_cast<double>(x) - 16.3) / (std::sqrt(2.0) * width)));
      f[y * 32 + x] = static_cast<float>(gain * s + offset);
    }
  }
  return f;
}

const LineProfile kAcross{16.0, 6.0, 16.0, 26.0, 41};

} // namespace

TEST_CASE("rmse") {
  Rng r(1);
  const Cine a = random_cine(3, 8, 8, r), b = random_cine(3, 8, 8, r);
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, b) == rmse(b, a));
  Cine c = a;
  for (auto &v : c.values()) {
    v += 0.25f;
  }
  CHECK(rmse(a, c) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK_THROWS_AS(rmse(a, Cine(3, 8, 9)), ShapeError);
}

TEST_CASE("ssim") {
  Rng r(2);
  const Cine a = random_cine(2, 24, 24, r), b = random_cine(2, 24, 24, r);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) < 0.2);
  Cine inv = a;
  for (auto &v : inv.values()) {
    v = 1.0f - v;
  }
  CHECK(ssim(a, inv) < 0.0);

  // Constant frames: only the luminance term is left.
  const double ma = 0.3, mb = 0.6, c1 = 0.01 * 0.01;
  std::vector<float> fa(20 * 20, float(ma)), fb(20 * 20, float(mb));
  const double oracle = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  CHECK(ssim_frame(fa, fb, 20, 20) == doctest::Approx(oracle).epsilon(1e-6));

  // Noise lowers it monotonically.
  double prev = 1.0;
  for (double sigma : {0.01, 0.05, 0.2}) {
    Cine n = a;
    Rng g(3);
    for (auto &v : n.values()) {
      v += static_cast<float>(sigma * g.normal());
    }
    const double s = ssim(a, n);
    CHECK(s < prev);
    prev = s;
  }
  CHECK_THROWS(ssim_frame(fa, fb, 8, 50));
}

TEST_CASE("edge sharpness") {
  SUBCASE("monotone in blur") {
    const double s1 = edge_sharpness(edge_frame(1.0), 32, 32, kAcross);
    const double s2 = edge_sharpness(edge_frame(2.0), 32, 32, kAcross);
    const double s4 = edge_sharpness(edge_frame(4.0), 32, 32, kAcross);
    CHECK(s1 > s2);
    CHECK(s2 > s4);
  }
  SUBCASE("linear ramp has unit slope over the normalized profile") {
    std::vector<double> ramp(30);
    for (std::size_t i = 0; i < ramp.size(); ++i) {
      ramp[i] = 2.0 + 0.5 * static_cast<double>(i);
    }
    CHECK(profile_sharpness(ramp) == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("invariant to affine intensity changes") {
    const double base = edge_sharpness(edge_frame(2.0), 32, 32, kAcross);
    CHECK(edge_sharpness(edge_frame(2.0, 3.7, 0.2), 32, 32, kAcross) == doctest::Approx(base).epsilon(1e-5));
  }
  SUBCASE("flat profiles and bad lines") {
    std::vector<float> flat(32 * 32, 0.4f);
    CHECK_THROWS_AS(edge_sharpness(flat, 32, 32, kAcross), NumericalError);
    LineProfile outside{0.0, 0.0, 40.0, 0.0, 15};
    CHECK_THROWS_AS(edge_sharpness(edge_frame(1.0), 32, 32, outside), ShapeError);
    Cine c(1, 32, 32);
    CHECK_THROWS_AS(edge_sharpness(c, std::vector<LineProfile>{kAcross}), NumericalError);
  }
  SUBCASE("profiles across a phantom border") {
    PhantomSpec p;
    p.matrix = 96;
    DatasetConfig cfg;
    cfg.matrix = 96;
    cfg.crop = 64;
    const auto lines = phantom_edge_profiles(p, cfg, {});
    REQUIRE(lines.size() == 6);
    for (const auto &l : lines) {
      for (double v : {l.y0, l.x0, l.y1, l.x1}) {
        CHECK(v >= 0.0);
        CHECK(v <= 63.0);
      }
    }
  }
}

TEST_CASE("bland altman") {
  const std::vector<double> x{0.1, 0.5, 0.9};
  const auto same = bland_altman(x, x);
  CHECK(same.bias == 0.0);
  CHECK(same.loa_low == 0.0);
  CHECK(same.loa_high == 0.0);
  const std::vector<double> ref{0.0, 0.0}, test{1.0, 3.0};
  const auto ba = bland_altman(ref, test);
  CHECK(ba.bias == doctest::Approx(2.0));
  CHECK(ba.loa_low == doctest::Approx(2.0 - 2.0 * std::sqrt(2.0)));
  CHECK(ba.loa_high == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(bland_altman(x, ref), ShapeError);
}

TEST_CASE("flicker") {
  Cine still(5, 4, 4);
  for (auto &v : still.values()) {
    v = 0.3f;
  }
  CHECK(flicker_metric(still) == 0.0);
  Cine linear(5, 4, 4);
  for (std::size_t t = 0; t < 5; ++t) {
    for (auto &v : linear.frame(t)) {
      v = 0.1f * t;
    }
  }
  CHECK(flicker_metric(linear) == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
  const float a = 0.25f;
  Cine alt(6, 3, 3);
  for (std::size_t t = 0; t < 6; ++t) {
    for (auto &v : alt.frame(t)) {
      v = t % 2 ? a : -a;
    }
  }
  CHECK(flicker_metric(alt) == doctest::Approx(16.0 * a * a));
  CHECK_THROWS_AS(flicker_metric(Cine(2, 3, 3)), ShapeError);
}

TEST_CASE("timing helpers") {
  auto [v, dt] = timed([] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return 7;
  });
  CHECK(v == 7);
  CHECK(dt >= 0.019);
  int calls = 0;
  const auto s = repeat_timing([&] { ++calls; }, 4);
  CHECK(calls == 4);
  CHECK(s.runs.size() == 4);
  CHECK(s.min_s <= s.median_s);
}

TEST_CASE("metric report") {
  MetricReport rep;
  rep.add({"unet", "TGA_ROT", "", 0.0, 0, 0.1, 0.8, 1.0, 0.5});
  rep.add({"grasp", "TGA_ROT", "", 0.0, 0, 0.05, 0.9, 2.0, 10.0});
  rep.add({"unet", "TGA_ROT", "", 0.0, 1, 0.3, 0.6, 3.0, 0.7});
  const auto sum = rep.summarize();
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].method == "unet");
  CHECK(sum[0].n == 2);
  CHECK(sum[0].rmse_mean == doctest::Approx(0.2));
  CHECK(sum[0].rmse_sd == doctest::Approx(std::sqrt(0.02)));
  CHECK(sum[0].ssim_mean == doctest::Approx(0.7));
  CHECK(sum[0].wall_time_mean_s == doctest::Approx(0.6));
  CHECK(sum[1].n == 1);

  const auto j = rep.summary_json();
  CHECK(j.size() == 2);
  CHECK(j[1].at("method") == "grasp");

  fs::create_directories(fs::temp_directory_path() / "reconlab_tests");
  const auto path = fs::temp_directory_path() / "reconlab_tests" / "metrics.csv";
  rep.write_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,pattern,sweep_axis,sweep_value,sample,rmse,ssim,edge_sharpness,wall_time_s");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
  }
  CHECK(n == 3);
}

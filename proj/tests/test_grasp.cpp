#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include <nlohmann/json.hpp>

#include "reconlab/grasp.hpp"
#include "reconlab/rng.hpp"
#include "reconlab/tensor_io.hpp"

using namespace reconlab;

namespace {

// Pulsating disc plus a static square, in [0, 1].
Cine beating(std::size_t t, std::size_t n) {
  Cine c(t, n, n);
  for (std::size_t f = 0; f < t; ++f) {
    const double r = n * (0.18 + 0.06 * std::cos(2.0 * M_PI * f / t));
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dy = y - n * 0.45, dx = x - n * 0.5;
        float v = 0.0f;
        if (dy * dy + dx * dx < r * r) {
          v = 1.0f;
        } else if (y > n * 0.7 && y < n * 0.85 && x > n * 0.2 && x < n * 0.4) {
          v = 0.5f;
        } else if (dy * dy + dx * dx < 1.6 * 1.6 * r * r) {
          v = 0.3f;
        }
        c.at(f, y, x) = v;
      }
    }
  }
  return c;
}

TrajectorySpec spec(std::size_t n, std::size_t spokes, std::size_t full) {
  TrajectorySpec s;
  s.pattern = Pattern::TgaRot;
  s.readout_len = n;
  s.readout_oversampling = true;
  s.spokes_per_frame = spokes;
  s.full_spokes = full;
  return s;
}

double cine_rmse(const Cine &a, const Cine &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return std::sqrt(s / a.size());
}

std::vector<cdouble> random_complex(std::size_t n, Rng &r) {
  std::vector<cdouble> v(n);
  for (auto &z : v) {
    z = {r.normal(), r.normal()};
  }
  return v;
}

cdouble inner(const std::vector<cdouble> &a, const std::vector<cdouble> &b) {
  cdouble s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

double tv_l1(const ComplexCine &x, bool circular = true) {
  double s = 0.0;
  for (const auto &d : temporal_diff(x.data, x.frames, x.frame_size(), circular)) {
    s += std::abs(d);
  }
  return s;
}

} // namespace

TEST_CASE("temporal difference and its adjoint") {
  Rng r(1);
  for (bool circular : {true, false}) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t T = 6, n = 7;
      const auto x = random_complex(T * n, r);
      const auto d = random_complex((circular ? T : T - 1) * n, r);
      const auto dx = temporal_diff(x, T, n, circular);
      REQUIRE(dx.size() == d.size());
      const auto dtd = temporal_diff_adjoint(d, T, n, circular);
      CHECK(std::abs(inner(d, dx) - inner(dtd, x)) < 1e-12 * std::abs(inner(d, dx)) + 1e-12);
    }
    // Constant series has zero variation.
    std::vector<cdouble> c(4 * 3, cdouble(2.0, -1.0));
    for (const auto &v : temporal_diff(c, 4, 3, circular)) {
      CHECK(v == cdouble(0.0));
    }
  }
  // One pixel alternating +-1 over 4 frames: every difference has magnitude 2.
  std::vector<cdouble> osc{1.0, -1.0, 1.0, -1.0};
  const auto d = temporal_diff(osc, 4, 1, true);
  REQUIRE(d.size() == 4);
  CHECK(d[0] == cdouble(-2.0));
  CHECK(d[1] == cdouble(2.0));
  CHECK(d[3] == cdouble(2.0)); // wraps to frame 0
  CHECK(temporal_diff(osc, 4, 1, false).size() == 3);
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(soft_threshold(-0.5, 0.2) == doctest::Approx(-0.3));
  CHECK(soft_threshold(-0.1, 0.2) == 0.0);
  CHECK(soft_threshold(0.7, 0.0) == 0.7);
  const cdouble z = soft_threshold(cdouble(3.0, 4.0), 1.0);
  CHECK(z.real() == doctest::Approx(2.4));
  CHECK(z.imag() == doctest::Approx(3.2));
  CHECK(soft_threshold(cdouble(0.1, 0.1), 1.0) == cdouble(0.0));
  CHECK(soft_threshold(cdouble(0.0), 0.0) == cdouble(0.0));
}

TEST_CASE("config validation and json") {
  GraspConfig c;
  c.lambda = 0.1;
  c.circular = false;
  nlohmann::json j = c;
  const auto back = j.get<GraspConfig>();
  CHECK(back.lambda == 0.1);
  CHECK(!back.circular);
  GraspConfig bad;
  bad.rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = GraspConfig{};
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero data returns zero") {
  RadialKSpace k(spec(24, 6, 40), 6, 1, 24, 24);
  GraspConfig cfg;
  cfg.admm_iters = 5;
  const auto r = grasp_reconstruct(k, cfg);
  for (const auto &v : r.x.data) {
    CHECK(v == cdouble(0.0));
  }
  for (float v : r.magnitude.values()) {
    CHECK(v == 0.0f);
  }
}

TEST_CASE("fully sampled data without regularization reproduces the image") {
  // Hard edges leak energy outside the sampled k-space disc, so use smooth blobs.
  Cine truth(4, 32, 32);
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) {
        const double a = (y - 14.0 - f) / 4.0, b = (x - 16.0) / 5.0, c = (y - 20.0) / 3.0, d = (x - 10.0 + f) / 3.0;
        truth.at(f, y, x) = static_cast<float>(std::exp(-a * a - b * b) + 0.5 * std::exp(-c * c - d * d));
      }
    }
  }
  truth = normalize01(truth);
  const auto c = corrupt_cine(truth, spec(32, 60, 60));
  GraspConfig cfg;
  cfg.lambda = 0.0;
  cfg.admm_iters = 10;
  const auto r = grasp_reconstruct(c.kspace, cfg);
  CHECK(cine_rmse(normalize01(r.magnitude), truth) < 0.02);
}

TEST_CASE("undersampled reconstruction") {
  const std::size_t n = 32, T = 12;
  const Cine truth = beating(T, n);
  const auto c = corrupt_cine(truth, spec(n, 5, 50));
  const double grid_rmse = cine_rmse(normalize01(c.aliased), truth);

  GraspConfig cfg;
  cfg.admm_iters = 50;
  GraspOptions opts;
  opts.snapshot_iters = {5, 10, 20, 40};
  const auto r = grasp_reconstruct(c.kspace, cfg, opts);
  const double grasp_rmse = cine_rmse(normalize01(r.magnitude), truth);
  CHECK(grasp_rmse < grid_rmse);

  SUBCASE("objective settles") {
    REQUIRE(r.trace.size() == 50);
    double best = r.trace[4].total;
    for (std::size_t i = 5; i < r.trace.size(); ++i) {
      CHECK(r.trace[i].total <= best * 1.01);
      best = std::min(best, r.trace[i].total);
      CHECK(r.trace[i].total == doctest::Approx(r.trace[i].fidelity + r.trace[i].tv));
    }
    CHECK(r.trace.back().primal_residual * 10.0 <= r.trace.front().primal_residual);
  }

  SUBCASE("successive iterates move less") {
    REQUIRE(r.snapshots.size() == 4);
    auto dist = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.snapshots.at(a).data.size(); ++i) {
        s += std::norm(r.snapshots.at(a).data[i] - r.snapshots.at(b).data[i]);
      }
      return std::sqrt(s);
    };
    // Per-iteration step over each window.
    const double s1 = dist(5, 10) / 5, s2 = dist(10, 20) / 10, s3 = dist(20, 40) / 20;
    CHECK(s2 < s1);
    CHECK(s3 < s2);
  }

  SUBCASE("stronger regularization lowers the temporal variation") {
    GraspConfig lo = cfg, hi = cfg;
    lo.lambda = 0.005;
    hi.lambda = 0.1;
    lo.admm_iters = hi.admm_iters = 30;
    const double tv_lo = tv_l1(grasp_reconstruct(c.kspace, lo).x);
    const double tv_mid = tv_l1(r.x);
    const double tv_hi = tv_l1(grasp_reconstruct(c.kspace, hi).x);
    CHECK(tv_lo > tv_mid);
    CHECK(tv_mid > tv_hi);
  }
}

TEST_CASE("multi-coil data") {
  const Cine truth = beating(8, 32);
  CorruptOptions o;
  o.ncoils = 4;
  const auto c = corrupt_cine(truth, spec(32, 6, 50), o);
  GraspConfig cfg;
  cfg.admm_iters = 20;
  const auto r = grasp_reconstruct(c.kspace, cfg);
  CHECK(cine_rmse(normalize01(r.magnitude), truth) < cine_rmse(normalize01(c.aliased), truth));
  const auto maps = synthetic_coil_maps(32, 32, 4);
  GraspOptions opts;
  opts.coil_maps = &maps;
  CHECK(grasp_reconstruct(c.kspace, cfg, opts).magnitude.same_shape(truth));
  const auto wrong = synthetic_coil_maps(32, 32, 3);
  opts.coil_maps = &wrong;
  CHECK_THROWS_AS(grasp_reconstruct(c.kspace, cfg, opts), ShapeError);
}

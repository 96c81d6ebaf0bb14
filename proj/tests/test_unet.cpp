#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "reconlab/nn/train.hpp"
#include "reconlab/rng.hpp"

using namespace reconlab;
using namespace reconlab::nn;
namespace fs = std::filesystem;

namespace {

UNetConfig tiny(NetMode mode = NetMode::Spatiotemporal) {
  UNetConfig c;
  c.levels = 2;
  c.base_channels = 2;
  c.frames = 4;
  c.mode = mode;
  return c;
}

Cine random_cine(std::size_t t, std::size_t h, std::size_t w, Rng &r) {
  Cine c(t, h, w);
  for (auto &v : c.values()) {
    v = static_cast<float>(r.uniform());
  }
  return c;
}

// Gives the zero-initialised output layer some weight so the residual is live.
void perturb(UNetParams &p, Rng &r, double scale = 0.1) {
  for (auto &t : p.tensors) {
    for (auto &v : t.storage()) {
      v += static_cast<float>(scale * r.normal());
    }
  }
  p.touch();
}

fs::path scratch(const std::string &name) {
  fs::path d = fs::temp_directory_path() / "reconlab_tests";
  fs::create_directories(d);
  return d / name;
}

} // namespace

TEST_CASE("parameter count matches a hand count") {
  UNetConfig c;
  c.levels = 2;
  c.base_channels = 16;
  c.frames = 20;
  // enc0: 1->16, 16->16; bottom: 16->32, 32->32; up 32->16 (2x2x2);
  // dec0: 32->16, 16->16; final 16->1, all 3x3x3 with biases.
  const std::size_t hand = (16 * 1 * 27 + 16) + (16 * 16 * 27 + 16) + (32 * 16 * 27 + 32) + (32 * 32 * 27 + 32) +
                           (32 * 16 * 8 + 16) + (16 * 32 * 27 + 16) + (16 * 16 * 27 + 16) + (1 * 16 * 27 + 1);
  CHECK(parameter_count(c) == hand);
  CHECK(init_params(c, 1).count() == hand);

  UNetConfig d; // 3 levels, 32 base, 20 frames: time pooled 20 -> 10 -> 5
  CHECK(d.frames_at(2) == 5);
  CHECK(init_params(d, 1).count() == parameter_count(d));

  UNetConfig odd = d;
  odd.frames = 5; // no temporal pooling possible
  CHECK(odd.pool_t(0) == 1);
  CHECK(init_params(odd, 1).count() == parameter_count(odd));

  UNetConfig flat = d;
  flat.mode = NetMode::PerFrame;
  CHECK(flat.kernel_t() == 1);
  CHECK(flat.pool_t(0) == 1);
  CHECK(init_params(flat, 1).count() == parameter_count(flat));
  CHECK(parameter_count(flat) < parameter_count(d));

  UNetConfig nopool = d;
  nopool.temporal_pool = false;
  CHECK(nopool.pool_t(0) == 1);
  CHECK(init_params(nopool, 1).count() == parameter_count(nopool));
}

TEST_CASE("identity at initialisation") {
  Rng r(1);
  for (auto mode : {NetMode::Spatiotemporal, NetMode::PerFrame}) {
    const auto p = init_params(tiny(mode), 3);
    const Cine x = random_cine(4, 8, 8, r);
    CHECK(unet_forward(p, x) == x);
  }
  UNetConfig c;
  c.levels = 2;
  c.base_channels = 16;
  const auto p = init_params(c, 9);
  const Cine x = random_cine(20, 16, 16, r);
  CHECK(unet_forward(p, x) == x);
}

TEST_CASE("output is non-negative and keeps its shape") {
  Rng r(2);
  auto p = init_params(tiny(), 4);
  perturb(p, r, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    Cine x(4, 8, 12);
    for (auto &v : x.values()) {
      v = static_cast<float>(r.normal());
    }
    const Cine y = unet_forward(p, x);
    CHECK(y.same_shape(x));
    for (float v : y.values()) {
      CHECK(v >= 0.0f);
    }
  }
  CHECK_THROWS_AS(unet_forward(p, Cine(4, 7, 8)), ShapeError);
  CHECK_THROWS_AS(unet_forward(p, Cine(5, 8, 8)), ShapeError);
}

TEST_CASE("init is seeded") {
  const auto a = init_params(tiny(), 1), b = init_params(tiny(), 1), c = init_params(tiny(), 2);
  CHECK(a.tensors == b.tensors);
  CHECK(!(a.tensors == c.tensors));
  CHECK(a.names.front() == "enc0.conv0.weight");
  CHECK(a.names.back() == "final.bias");
  for (float v : a.tensors[a.tensors.size() - 2].values()) {
    CHECK(v == 0.0f);
  }
}

TEST_CASE("whole-network gradient against finite differences") {
  Rng r(5);
  for (auto mode : {NetMode::Spatiotemporal, NetMode::PerFrame}) {
    auto p = init_params(tiny(mode), 6);
    perturb(p, r, 0.2);
    const Cine x = random_cine(4, 8, 8, r);
    const Cine target = random_cine(4, 8, 8, r);
    Gradients g = zero_gradients(p);
    sample_gradient(p, {&x, &target}, LossKind::L2, g);
    // Random directions can nearly cancel and drown in float noise, so bias the
    // direction towards the gradient.
    double gnorm2 = 0.0;
    std::size_t n = 0;
    for (const auto &t : g) {
      for (float v : t.values()) {
        gnorm2 += double(v) * v;
        ++n;
      }
    }
    const double rms = std::sqrt(gnorm2 / n);
    std::vector<std::vector<float>> dir;
    double analytic = 0.0;
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      dir.emplace_back(p.tensors[i].size());
      for (std::size_t k = 0; k < dir.back().size(); ++k) {
        dir.back()[k] = static_cast<float>((g[i][k] + 0.5 * rms * r.normal()) / rms);
        analytic += double(dir.back()[k]) * g[i][k];
      }
    }
    auto loss_at = [&](double h) {
      UNetParams q = p;
      for (std::size_t i = 0; i < q.tensors.size(); ++i) {
        for (std::size_t k = 0; k < dir[i].size(); ++k) {
          q.tensors[i][k] += static_cast<float>(h * dir[i][k]);
        }
      }
      q.touch();
      return loss(unet_forward(q, x).values(), target.values(), LossKind::L2).value;
    };
    const double h = 2e-4;
    const double numeric = (loss_at(h) - loss_at(-h)) / (2 * h);
    CHECK(std::abs(numeric - analytic) / std::abs(analytic) < 1e-2);
  }
}

TEST_CASE("stale tape is rejected") {
  Rng r(6);
  auto p = init_params(tiny(), 1);
  const Cine x = random_cine(4, 8, 8, r);
  Tape tape;
  const Cine y = unet_forward(p, x, &tape);
  Gradients g = zero_gradients(p);
  std::vector<float> gy(y.size(), 1.0f);
  unet_backward(p, tape, gy, g);
  p.touch();
  CHECK_THROWS_AS(unet_backward(p, tape, gy, g), Error);
  Tape empty;
  CHECK_THROWS(unet_backward(p, empty, gy, g));
}

TEST_CASE("per-frame network treats frames independently") {
  Rng r(7);
  auto p = init_params(tiny(NetMode::PerFrame), 2);
  perturb(p, r, 0.3);
  Cine x = random_cine(4, 8, 8, r);
  for (std::size_t t = 1; t < 4; ++t) {
    std::copy(x.frame(0).begin(), x.frame(0).end(), x.frame(t).begin());
  }
  const Cine y = unet_forward(p, x);
  for (std::size_t t = 1; t < 4; ++t) {
    for (std::size_t i = 0; i < y.frame_size(); ++i) {
      CHECK(y.frame(t)[i] == y.frame(0)[i]);
    }
  }
  const auto single = unet_forward_2d(p, x.frame(0), 8, 8);
  for (std::size_t i = 0; i < single.size(); ++i) {
    CHECK(single[i] == doctest::Approx(y.frame(0)[i]).epsilon(1e-6));
  }
  // Any frame count works for a 2D net.
  CHECK(unet_forward(p, random_cine(7, 8, 8, r)).frames() == 7);
  CHECK_THROWS_AS(unet_forward_2d(init_params(tiny(), 1), x.frame(0), 8, 8), ConfigError);
}

TEST_CASE("loss values and gradients") {
  const std::vector<float> a{0.2f, 0.4f, 0.9f};
  auto z = loss(a, a, LossKind::L2);
  CHECK(z.value == 0.0);
  for (float g : z.grad) {
    CHECK(g == 0.0f);
  }
  const std::vector<float> b{0.3f, 0.5f, 1.0f};
  CHECK(loss(b, a, LossKind::L2).value == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(loss(b, a, LossKind::L1).value == doctest::Approx(0.1).epsilon(1e-5));
  CHECK(loss(a, a, LossKind::L1).grad[0] == 0.0f);
  CHECK_THROWS_AS(loss(a, std::vector<float>{1.0f}, LossKind::L2), ShapeError);

  Rng r(8);
  for (auto kind : {LossKind::L2, LossKind::L1}) {
    std::vector<float> p(10), t(10);
    for (std::size_t i = 0; i < 10; ++i) {
      p[i] = static_cast<float>(r.normal());
      t[i] = p[i] + static_cast<float>(0.5 * r.normal() + (i % 2 ? 0.1 : -0.1));
    }
    const auto res = loss(p, t, kind);
    for (std::size_t i = 0; i < 10; ++i) {
      auto up = p, down = p;
      up[i] += 1e-3f;
      down[i] -= 1e-3f;
      const double fd = (loss(up, t, kind).value - loss(down, t, kind).value) / 2e-3;
      CHECK(std::abs(fd - res.grad[i]) <= 1e-3 * std::max(1e-2, std::abs(fd)) + 1e-6);
    }
  }
}

TEST_CASE("adam update") {
  UNetConfig c = tiny();
  auto p = init_params(c, 1);
  const auto before = p.tensors;
  AdamState s = adam_init(p);
  TrainConfig cfg;
  Gradients g = zero_gradients(p);
  g[0][0] = 0.37f;
  g[0][1] = -5.0f;
  adam_step(p, g, s, cfg);
  CHECK(s.step == 1);
  CHECK(before[0][0] - p.tensors[0][0] == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(p.tensors[0][1] - before[0][1] == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(p.tensors[1] == before[1]);

  // Zero gradient: parameters stay put (up to the decaying momentum), moments decay.
  const float m0 = s.m[0][0], v0 = s.v[0][0];
  Gradients zero = zero_gradients(p);
  const auto mid = p.tensors;
  adam_step(p, zero, s, cfg);
  CHECK(s.m[0][0] == doctest::Approx(0.9 * m0));
  CHECK(s.v[0][0] == doctest::Approx(0.999 * v0));
  CHECK(p.tensors[1] == mid[1]);

  g[2][0] = std::nanf("");
  CHECK_THROWS_AS(adam_step(p, g, s, cfg), NumericalError);
}

TEST_CASE("training is deterministic and reduces the loss") {
  Rng r(9);
  std::vector<Cine> in, out;
  for (int i = 0; i < 3; ++i) {
    in.push_back(random_cine(4, 8, 8, r));
    out.push_back(in.back());
    for (auto &v : out.back().values()) {
      v = 0.5f * v + 0.2f;
    }
  }
  std::vector<TrainPair> data;
  for (int i = 0; i < 3; ++i) {
    data.push_back({&in[i], &out[i]});
  }
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch = 2;
  cfg.lr = 3e-3;
  cfg.seed = 4;
  cfg.checkpoint_every = 5;
  std::vector<std::size_t> seen;
  const auto a = train(data, tiny(), cfg, [&](std::size_t e, const UNetParams &) { seen.push_back(e); });
  const auto b = train(data, tiny(), cfg);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.params.tensors == b.params.tensors);
  CHECK(seen == std::vector<std::size_t>{5, 10, 15});
  CHECK(a.loss_history.size() == 15);
  CHECK(a.loss_history.back() < a.loss_history.front());

  cfg.seed = 5;
  CHECK(train(data, tiny(), cfg).loss_history != a.loss_history);
  CHECK_THROWS_AS(train({}, tiny(), cfg), ConfigError);
}

TEST_CASE("checkpoint and loss history files") {
  Rng r(10);
  auto p = init_params(tiny(), 3);
  perturb(p, r);
  const auto path = scratch("net.rlck");
  save_checkpoint(path, p, {{"model", "x"}});
  nlohmann::json header;
  const auto back = load_checkpoint(path, &header);
  CHECK(back.tensors == p.tensors);
  CHECK(back.names == p.names);
  CHECK(header.at("model") == "x");
  CHECK(header.at("parameter_count") == p.count());
  CHECK(header.at("layers").size() == p.tensors.size());
  const Cine x = random_cine(4, 8, 8, r);
  CHECK(unet_forward(back, x) == unet_forward(p, x));
  CHECK_THROWS_AS(load_checkpoint(scratch("missing.rlck")), MissingArtifact);

  const std::vector<double> hist{0.5, 0.25, 1.0 / 3.0};
  write_loss_history(scratch("loss.csv"), hist);
  CHECK(read_loss_history(scratch("loss.csv")) == hist);
}

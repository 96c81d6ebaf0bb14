#include "reconlab/nn/unet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <variant>

#include <nlohmann/json.hpp>

#include "reconlab/nn/kernels.hpp"
#include "reconlab/rng.hpp"

namespace reconlab::nn {

namespace {

std::atomic<std::uint64_t> g_version{1};

std::uint64_t next_version() { return g_version.fetch_add(1); }

struct ConvOp {
  std::size_t param; // weight index; bias is param + 1
  std::size_t in;
  std::size_t out;
  ConvShape shape;
  bool relu;
};

struct PoolOp {
  std::size_t in;
  std::size_t out;
  std::size_t argmax;
  PoolShape shape;
};

struct UpOp {
  std::size_t param;
  std::size_t in;
  std::size_t out;
  UpShape shape;
};

struct ConcatOp {
  std::size_t a;
  std::size_t b;
  std::size_t out;
  std::size_t ca;
  std::size_t cb;
  std::size_t voxels;
};

// out = relu(buffer 0 + in)
struct OutputOp {
  std::size_t in;
  std::size_t out;
};

using Op = std::variant<ConvOp, PoolOp, UpOp, ConcatOp, OutputOp>;

struct Plan {
  std::vector<Op> ops;
  std::vector<std::size_t> buffer_sizes;
  std::vector<std::string> param_names;
  std::vector<std::vector<std::size_t>> param_shapes;
  std::vector<std::size_t> fan_in;
  std::size_t pools = 0;
  std::size_t output = 0;
};

Plan build_plan(const UNetConfig &cfg, std::size_t t, std::size_t h, std::size_t w) {
  Plan p;
  const std::size_t kt = cfg.kernel_t();
  p.buffer_sizes.push_back(t * h * w);
  auto new_buffer = [&](std::size_t n) {
    p.buffer_sizes.push_back(n);
    return p.buffer_sizes.size() - 1;
  };
  auto add_param = [&](std::string name, std::vector<std::size_t> shape, std::size_t fan_in) {
    p.param_names.push_back(std::move(name));
    p.param_shapes.push_back(std::move(shape));
    p.fan_in.push_back(fan_in);
    return p.param_names.size() - 1;
  };
  auto conv = [&](const std::string &name, std::size_t in, std::size_t cin, std::size_t cout, std::size_t tt,
                  std::size_t hh, std::size_t ww, bool relu) {
    const std::size_t wi = add_param(name + ".weight", {cout, cin, kt, 3, 3}, cin * kt * 9);
    add_param(name + ".bias", {cout}, 0);
    const std::size_t out = new_buffer(cout * tt * hh * ww);
    p.ops.emplace_back(ConvOp{wi, in, out, ConvShape{cin, cout, tt, hh, ww, kt, 3, 3}, relu});
    return out;
  };

  std::vector<std::size_t> skips;
  std::size_t cur = 0;
  std::size_t cin = 1;
  std::size_t tt = t, hh = h, ww = w;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::size_t c = cfg.channels(l);
    for (std::size_t k = 0; k < cfg.convs_per_level; ++k) {
      cur = conv("enc" + std::to_string(l) + ".conv" + std::to_string(k), cur, k == 0 ? cin : c, c, tt, hh, ww, true);
    }
    cin = c;
    if (l + 1 < cfg.levels) {
      skips.push_back(cur);
      const std::size_t pt = cfg.pool_t(l);
      const PoolShape ps{c, tt, hh, ww, pt, 2, 2};
      const std::size_t out = new_buffer(c * ps.out_voxels());
      p.ops.emplace_back(PoolOp{cur, out, p.pools++, ps});
      cur = out;
      tt /= pt;
      hh /= 2;
      ww /= 2;
    }
  }
  for (std::size_t l = cfg.levels - 1; l-- > 0;) {
    const std::size_t c = cfg.channels(l);
    const std::size_t pt = cfg.pool_t(l);
    const std::string name = "dec" + std::to_string(l);
    const UpShape us{cfg.channels(l + 1), c, tt, hh, ww, pt, 2, 2};
    const std::size_t wi = add_param(name + ".up.weight", {us.cin, c, pt, 2, 2}, us.cin);
    add_param(name + ".up.bias", {c}, 0);
    tt *= pt;
    hh *= 2;
    ww *= 2;
    const std::size_t up = new_buffer(c * tt * hh * ww);
    p.ops.emplace_back(UpOp{wi, cur, up, us});
    const std::size_t cat = new_buffer(2 * c * tt * hh * ww);
    p.ops.emplace_back(ConcatOp{skips[l], up, cat, c, c, tt * hh * ww});
    cur = cat;
    for (std::size_t k = 0; k < cfg.convs_per_level; ++k) {
      cur = conv(name + ".conv" + std::to_string(k), cur, k == 0 ? 2 * c : c, c, tt, hh, ww, true);
    }
  }
  const std::size_t res = conv("final", cur, cfg.channels(0), 1, tt, hh, ww, false);
  p.output = new_buffer(t * h * w);
  p.ops.emplace_back(OutputOp{res, p.output});
  return p;
}

void check_input(const UNetConfig &cfg, std::size_t t, std::size_t h, std::size_t w) {
  const std::size_t div = std::size_t{1} << (cfg.levels - 1);
  if (t == 0 || h == 0 || w == 0 || h % div != 0 || w % div != 0) {
    throw ShapeError("network input " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not divisible by " + std::to_string(div));
  }
  if (cfg.mode == NetMode::Spatiotemporal && t != cfg.frames) {
    throw ShapeError("network built for " + std::to_string(cfg.frames) + " frames, got " + std::to_string(t));
  }
}

void add_into(std::vector<float> &dst, const std::vector<float> &src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += src[i];
  }
}

} // namespace

void UNetConfig::validate() const {
  if (levels < 1 || levels > 6) {
    throw ConfigError("unet.levels must be in [1, 6]");
  }
  if (base_channels < 1) {
    throw ConfigError("unet.base_channels must be > 0");
  }
  if (convs_per_level < 1) {
    throw ConfigError("unet.convs_per_level must be > 0");
  }
  if (frames < 1) {
    throw ConfigError("unet.frames must be > 0");
  }
}

std::size_t UNetConfig::pool_t(std::size_t level) const {
  if (mode == NetMode::PerFrame || !temporal_pool) {
    return 1;
  }
  return frames_at(level) % 2 == 0 ? 2 : 1;
}

std::size_t UNetConfig::frames_at(std::size_t level) const {
  if (mode == NetMode::PerFrame) {
    return frames;
  }
  std::size_t t = frames;
  for (std::size_t l = 0; l < level; ++l) {
    if (temporal_pool && t % 2 == 0) {
      t /= 2;
    }
  }
  return t;
}

void to_json(nlohmann::json &j, const UNetConfig &c) {
  j = {{"levels", c.levels},
       {"base_channels", c.base_channels},
       {"convs_per_level", c.convs_per_level},
       {"frames", c.frames},
       {"temporal_pool", c.temporal_pool},
       {"mode", c.mode == NetMode::PerFrame ? "2d" : "3d"}};
}

void from_json(const nlohmann::json &j, UNetConfig &c) {
  c = UNetConfig{};
  c.levels = j.value("levels", c.levels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.convs_per_level = j.value("convs_per_level", c.convs_per_level);
  c.frames = j.value("frames", c.frames);
  c.temporal_pool = j.value("temporal_pool", c.temporal_pool);
  const std::string mode = j.value("mode", std::string("3d"));
  if (mode == "3d") {
    c.mode = NetMode::Spatiotemporal;
  } else if (mode == "2d") {
    c.mode = NetMode::PerFrame;
  } else {
    throw ConfigError("unet.mode must be \"3d\" or \"2d\", got \"" + mode + "\"");
  }
}

std::size_t parameter_count(const UNetConfig &cfg) {
  cfg.validate();
  const std::size_t taps = cfg.kernel_t() * 9;
  const std::size_t m = cfg.convs_per_level - 1;
  std::size_t n = 0;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::size_t c = cfg.channels(l);
    const std::size_t cin = l == 0 ? 1 : cfg.channels(l - 1);
    n += cin * c * taps + c + m * (c * c * taps + c);
  }
  for (std::size_t l = 0; l + 1 < cfg.levels; ++l) {
    const std::size_t c = cfg.channels(l);
    n += cfg.channels(l + 1) * c * cfg.pool_t(l) * 4 + c;
    n += 2 * c * c * taps + c + m * (c * c * taps + c);
  }
  return n + cfg.channels(0) * taps + 1;
}

std::size_t UNetParams::count() const {
  std::size_t n = 0;
  for (const auto &t : tensors) {
    n += t.size();
  }
  return n;
}

bool UNetParams::finite() const {
  for (const auto &t : tensors) {
    for (float v : t.values()) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
  }
  return true;
}

void UNetParams::touch() { version = next_version(); }

UNetParams init_params(const UNetConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t div = std::size_t{1} << (cfg.levels - 1);
  const Plan plan = build_plan(cfg, cfg.frames, div, div);
  UNetParams p;
  p.config = cfg;
  p.names = plan.param_names;
  const std::size_t n = plan.param_names.size();
  for (std::size_t i = 0; i < n; ++i) {
    Tensor<float> t(plan.param_shapes[i]);
    // The last weight is the residual output layer, left at zero.
    const bool is_final = i + 2 == n;
    if (plan.fan_in[i] > 0 && !is_final) {
      const double bound = std::sqrt(6.0 / static_cast<double>(plan.fan_in[i]));
      Rng rng = Rng::stream(seed, "unet-init", i);
      for (float &v : t.values()) {
        v = static_cast<float>(rng.uniform(-bound, bound));
      }
    }
    p.tensors.push_back(std::move(t));
  }
  p.touch();
  return p;
}

Gradients zero_gradients(const UNetParams &params) {
  Gradients g;
  g.reserve(params.tensors.size());
  for (const auto &t : params.tensors) {
    g.emplace_back(t.shape());
  }
  return g;
}

Cine unet_forward(const UNetParams &params, const Cine &input, Tape *tape) {
  const auto &cfg = params.config;
  check_input(cfg, input.frames(), input.height(), input.width());
  const Plan plan = build_plan(cfg, input.frames(), input.height(), input.width());
  if (plan.param_names.size() != params.tensors.size()) {
    throw ShapeError("parameter set does not match its configuration");
  }
  std::vector<std::vector<float>> buf(plan.buffer_sizes.size());
  std::vector<std::vector<std::uint32_t>> argmax(plan.pools);
  buf[0].assign(input.values().begin(), input.values().end());
  for (const Op &op : plan.ops) {
    if (const auto *c = std::get_if<ConvOp>(&op)) {
      const auto &wt = params.tensors[c->param];
      if (wt.size() != c->shape.cout * c->shape.cin * c->shape.taps()) {
        throw ShapeError("weight shape mismatch for " + params.names[c->param]);
      }
      buf[c->out].resize(plan.buffer_sizes[c->out]);
      conv3d_forward(c->shape, buf[c->in].data(), wt.data(), params.tensors[c->param + 1].data(), buf[c->out].data());
      if (c->relu) {
        relu_forward(buf[c->out].size(), buf[c->out].data(), buf[c->out].data());
      }
    } else if (const auto *pl = std::get_if<PoolOp>(&op)) {
      buf[pl->out].resize(plan.buffer_sizes[pl->out]);
      argmax[pl->argmax].resize(plan.buffer_sizes[pl->out]);
      maxpool3d_forward(pl->shape, buf[pl->in].data(), buf[pl->out].data(), argmax[pl->argmax].data());
    } else if (const auto *u = std::get_if<UpOp>(&op)) {
      buf[u->out].resize(plan.buffer_sizes[u->out]);
      upconv3d_forward(u->shape, buf[u->in].data(), params.tensors[u->param].data(),
                       params.tensors[u->param + 1].data(), buf[u->out].data());
      relu_forward(buf[u->out].size(), buf[u->out].data(), buf[u->out].data());
    } else if (const auto *cc = std::get_if<ConcatOp>(&op)) {
      auto &out = buf[cc->out];
      out.resize(plan.buffer_sizes[cc->out]);
      std::copy(buf[cc->a].begin(), buf[cc->a].end(), out.begin());
      std::copy(buf[cc->b].begin(), buf[cc->b].end(), out.begin() + static_cast<std::ptrdiff_t>(buf[cc->a].size()));
    } else if (const auto *o = std::get_if<OutputOp>(&op)) {
      auto &out = buf[o->out];
      out.resize(plan.buffer_sizes[o->out]);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const float v = buf[0][i] + buf[o->in][i];
        out[i] = v > 0.0f ? v : 0.0f;
      }
    }
  }
  Cine result(input.frames(), input.height(), input.width(), input.frame_dt_ms());
  std::copy(buf[plan.output].begin(), buf[plan.output].end(), result.values().begin());
  if (tape != nullptr) {
    tape->version = params.version;
    tape->t = input.frames();
    tape->h = input.height();
    tape->w = input.width();
    tape->buffers = std::move(buf);
    tape->argmax = std::move(argmax);
    tape->recorded = true;
  }
  return result;
}

void unet_backward(const UNetParams &params, const Tape &tape, std::span<const float> grad_out, Gradients &grads) {
  if (!tape.recorded || tape.version != params.version) {
    throw Error("stale tape: parameters changed since the forward pass");
  }
  const Plan plan = build_plan(params.config, tape.t, tape.h, tape.w);
  if (grad_out.size() != plan.buffer_sizes[plan.output]) {
    throw ShapeError("output gradient has the wrong size");
  }
  if (grads.size() != params.tensors.size()) {
    throw ShapeError("gradient set does not match parameters");
  }
  const auto &buf = tape.buffers;
  std::vector<std::vector<float>> g(buf.size());
  g[plan.output].assign(grad_out.begin(), grad_out.end());
  std::vector<float> tmp;
  std::vector<float> gw;
  std::vector<float> gb;
  auto add_param_grad = [&](std::size_t idx, const std::vector<float> &v) {
    auto vals = grads[idx].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      vals[i] += v[i];
    }
  };
  for (auto it = plan.ops.rbegin(); it != plan.ops.rend(); ++it) {
    const Op &op = *it;
    if (const auto *o = std::get_if<OutputOp>(&op)) {
      tmp.resize(buf[o->out].size());
      for (std::size_t i = 0; i < tmp.size(); ++i) {
        tmp[i] = buf[o->out][i] > 0.0f ? g[o->out][i] : 0.0f;
      }
      add_into(g[o->in], tmp);
    } else if (const auto *c = std::get_if<ConvOp>(&op)) {
      if (g[c->out].empty()) {
        continue;
      }
      auto &gy = g[c->out];
      if (c->relu) {
        relu_backward(gy.size(), buf[c->out].data(), gy.data(), gy.data());
      }
      gw.resize(params.tensors[c->param].size());
      gb.resize(c->shape.cout);
      // The network input needs no gradient.
      const bool need_x = c->in != 0;
      tmp.resize(need_x ? buf[c->in].size() : 0);
      conv3d_backward(c->shape, buf[c->in].data(), params.tensors[c->param].data(), gy.data(),
                      need_x ? tmp.data() : nullptr, gw.data(), gb.data());
      add_param_grad(c->param, gw);
      add_param_grad(c->param + 1, gb);
      if (need_x) {
        add_into(g[c->in], tmp);
      }
    } else if (const auto *cc = std::get_if<ConcatOp>(&op)) {
      const auto &gy = g[cc->out];
      const auto split = static_cast<std::ptrdiff_t>(cc->ca * cc->voxels);
      add_into(g[cc->a], std::vector<float>(gy.begin(), gy.begin() + split));
      add_into(g[cc->b], std::vector<float>(gy.begin() + split, gy.end()));
    } else if (const auto *u = std::get_if<UpOp>(&op)) {
      auto &gy = g[u->out];
      relu_backward(gy.size(), buf[u->out].data(), gy.data(), gy.data());
      gw.resize(params.tensors[u->param].size());
      gb.resize(u->shape.cout);
      tmp.resize(buf[u->in].size());
      upconv3d_backward(u->shape, buf[u->in].data(), params.tensors[u->param].data(), gy.data(), tmp.data(),
                        gw.data(), gb.data());
      add_param_grad(u->param, gw);
      add_param_grad(u->param + 1, gb);
      add_into(g[u->in], tmp);
    } else if (const auto *pl = std::get_if<PoolOp>(&op)) {
      tmp.resize(buf[pl->in].size());
      maxpool3d_backward(pl->shape, g[pl->out].data(), tape.argmax[pl->argmax].data(), tmp.data());
      add_into(g[pl->in], tmp);
    }
    // Free gradient buffers that have been fully consumed.
    std::visit([&](const auto &o) { std::vector<float>().swap(g[o.out]); }, op);
  }
}

std::vector<float> unet_forward_2d(const UNetParams &params, std::span<const float> frame, std::size_t height,
                                   std::size_t width) {
  if (params.config.mode != NetMode::PerFrame) {
    throw ConfigError("unet_forward_2d needs a per-frame (2d) network");
  }
  if (frame.size() != height * width) {
    throw ShapeError("frame size does not match height x width");
  }
  Cine c(1, height, width);
  std::copy(frame.begin(), frame.end(), c.values().begin());
  const Cine out = unet_forward(params, c);
  return {out.values().begin(), out.values().end()};
}

} // namespace reconlab::nn

#include "reconlab/nn/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "reconlab/rng.hpp"
#include "reconlab/tensor_io.hpp"

namespace reconlab::nn {

namespace {

constexpr char kCheckpointMagic[8] = {'R', 'L', 'C', 'K', 'P', 'T', '1', '\0'};

std::string loss_name(LossKind k) { return k == LossKind::L1 ? "L1" : "L2"; }

} // namespace

LossResult loss(std::span<const float> pred, std::span<const float> truth, LossKind kind) {
  if (pred.size() != truth.size()) {
    throw ShapeError("loss: prediction and target sizes differ");
  }
  if (pred.empty()) {
    throw ShapeError("loss: empty input");
  }
  LossResult r;
  r.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - truth[i];
    if (kind == LossKind::L2) {
      acc += d * d;
      r.grad[i] = static_cast<float>(2.0 * d / n);
    } else {
      acc += std::abs(d);
      r.grad[i] = static_cast<float>((d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / n);
    }
  }
  r.value = acc / n;
  return r;
}

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw ConfigError("train.epochs must be >= 1");
  }
  if (batch < 1) {
    throw ConfigError("train.batch must be >= 1");
  }
  if (!(lr > 0.0)) {
    throw ConfigError("train.lr must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ConfigError("train: adam constants out of range");
  }
}

void to_json(nlohmann::json &j, const TrainConfig &c) {
  j = {{"epochs", c.epochs}, {"batch", c.batch}, {"lr", c.lr},     {"loss", loss_name(c.loss)},
       {"beta1", c.beta1},   {"beta2", c.beta2}, {"eps", c.eps},   {"checkpoint_every", c.checkpoint_every}};
}

void from_json(const nlohmann::json &j, TrainConfig &c) {
  c = TrainConfig{};
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  const std::string l = j.value("loss", std::string("L2"));
  if (l == "L2" || l == "l2") {
    c.loss = LossKind::L2;
  } else if (l == "L1" || l == "l1") {
    c.loss = LossKind::L1;
  } else {
    throw ConfigError("train.loss must be L2 or L1, got \"" + l + "\"");
  }
}

AdamState adam_init(const UNetParams &params) {
  AdamState s;
  for (const auto &t : params.tensors) {
    s.m.emplace_back(t.size(), 0.0f);
    s.v.emplace_back(t.size(), 0.0f);
  }
  return s;
}

void adam_step(UNetParams &params, const Gradients &grads, AdamState &state, const TrainConfig &cfg) {
  if (grads.size() != params.tensors.size() || state.m.size() != params.tensors.size()) {
    throw ShapeError("adam: gradient / state layout does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (float g : grads[i].values()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in " + params.names[i] + " at step " +
                             std::to_string(state.step + 1));
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto p = params.tensors[i].values();
    auto g = grads[i].values();
    auto &m = state.m[i];
    auto &v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      p[k] = static_cast<float>(p[k] - cfg.lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.eps));
    }
  }
  params.touch();
}

double sample_gradient(const UNetParams &params, const TrainPair &pair, LossKind kind, Gradients &grads) {
  if (pair.input == nullptr || pair.target == nullptr || !pair.input->same_shape(*pair.target)) {
    throw ShapeError("training pair input and target shapes differ");
  }
  Tape tape;
  const Cine out = unet_forward(params, *pair.input, &tape);
  const LossResult l = loss(out.values(), pair.target->values(), kind);
  if (!std::isfinite(l.value)) {
    throw NumericalError("non-finite training loss");
  }
  unet_backward(params, tape, l.grad, grads);
  return l.value;
}

TrainResult train(const std::vector<TrainPair> &data, const UNetConfig &net, const TrainConfig &cfg,
                  const CheckpointFn &on_checkpoint) {
  cfg.validate();
  if (data.empty()) {
    throw ConfigError("training set is empty");
  }
  TrainResult r{init_params(net, cfg.seed), {}};
  AdamState state = adam_init(r.params);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(cfg.seed, "train-shuffle", epoch);
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      Gradients grads = zero_gradients(r.params);
      for (std::size_t k = start; k < end; ++k) {
        epoch_loss += sample_gradient(r.params, data[order[k]], cfg.loss, grads);
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      for (auto &g : grads) {
        for (float &v : g.values()) {
          v *= inv;
        }
      }
      adam_step(r.params, grads, state, cfg);
    }
    r.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && on_checkpoint) {
      on_checkpoint(epoch, r.params);
    }
  }
  if (!r.params.finite()) {
    throw NumericalError("training produced non-finite parameters");
  }
  return r;
}

void save_checkpoint(const std::filesystem::path &path, const UNetParams &params, const nlohmann::json &extra) {
  nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
  header["config"] = params.config;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    layers.push_back({{"name", params.names[i]}, {"shape", params.tensors[i].shape()}});
  }
  header["layers"] = layers;
  header["parameter_count"] = params.count();
  const std::string text = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write checkpoint " + tmp.string());
    }
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    std::uint64_t len = text.size();
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) {
      le[i] = static_cast<unsigned char>(len >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(le), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto &t : params.tensors) {
      write_tensor(out, t);
    }
    if (!out) {
      throw IoError("failed writing checkpoint " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path &path, const UNetParams &params) {
  save_checkpoint(path, params, nlohmann::json::object());
}

UNetParams load_checkpoint(const std::filesystem::path &path, nlohmann::json *header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingArtifact("checkpoint not found: " + path.string());
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw FormatError("not a checkpoint file: " + path.string());
  }
  unsigned char le[8];
  in.read(reinterpret_cast<char *>(le), 8);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) {
    len |= static_cast<std::uint64_t>(le[i]) << (8 * i);
  }
  if (!in || len > (1u << 26)) {
    throw FormatError("bad checkpoint header length in " + path.string());
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) {
    throw FormatError("truncated checkpoint header in " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("checkpoint header is not JSON: " + std::string(e.what()));
  }
  UNetParams p = init_params(header.at("config").get<UNetConfig>(), 0);
  const auto &layers = header.at("layers");
  if (layers.size() != p.tensors.size()) {
    throw FormatError("checkpoint layer count does not match its config");
  }
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    auto t = read_tensor(in);
    auto *real = std::get_if<Tensor<float>>(&t);
    if (real == nullptr || real->shape() != p.tensors[i].shape() ||
        layers[i].at("name").get<std::string>() != p.names[i]) {
      throw FormatError("checkpoint layer " + std::to_string(i) + " does not match the architecture");
    }
    p.tensors[i] = std::move(*real);
  }
  if (!p.finite()) {
    throw NumericalError("checkpoint contains non-finite parameters");
  }
  p.touch();
  if (header_out != nullptr) {
    *header_out = std::move(header);
  }
  return p;
}

void write_loss_history(const std::filesystem::path &path, const std::vector<double> &history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "epoch,mean_loss\n";
  char line[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i + 1, history[i]);
    out << line;
  }
}

std::vector<double> read_loss_history(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifact("loss history not found: " + path.string());
  }
  std::string line;
  std::getline(in, line);
  std::vector<double> h;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError("malformed loss history line: " + line);
    }
    h.push_back(std::stod(line.substr(comma + 1)));
  }
  return h;
}

} // namespace reconlab::nn

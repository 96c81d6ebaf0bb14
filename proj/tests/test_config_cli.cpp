#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reconlab/config.hpp"
#include "reconlab/errors.hpp"

using namespace reconlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / "reconlab_cli";
  fs::create_directories(d);
  return d;
}

json tiny_json(const fs::path &out) {
  json j = json::parse(R"({
    "seed": 3,
    "dataset": {"n_train": 2, "n_test": 1, "matrix": 32, "crop": 24, "frames": 20,
                "phantom": {"matrix": 40}, "patterns": ["TGA_ROT"]},
    "unet": {"levels": 2, "base_channels": 4},
    "train": {"epochs": 2, "batch": 2, "checkpoint_every": 1},
    "grasp": {"admm_iters": 3},
    "sweeps": {"max_samples": 1, "snr_db": [20, 10], "accel": [12, 13], "crop_offsets": [-2, 0, 2]}
  })");
  j["output_dir"] = out.string();
  return j;
}

fs::path write_config(const std::string &name, const json &j) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(const std::string &args, const std::string &env = "") {
  const std::string cmd = env + " " + RECONLAB_BIN + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("defaults round trip through canonical json") {
  const ExperimentConfig d;
  const auto back = parse_config(to_json(d));
  CHECK(to_json(back) == to_json(d));
  CHECK(config_hash(back) == config_hash(d));
  CHECK(hex64(config_hash(d)).size() == 16);
}

TEST_CASE("schema errors name the offending key") {
  auto expect_error = [](const json &j, const std::string &needle) {
    try {
      parse_config(j);
      FAIL("accepted " << j.dump());
    } catch (const ConfigError &e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
    }
  };
  expect_error(json{{"sed", 1}}, "sed");
  expect_error(json{{"dataset", {{"matrx", 64}}}}, "matrx");
  expect_error(json{{"dataset", {{"matrix", "big"}}}}, "matrix");
  expect_error(json{{"dataset", {{"patterns", {"SPIRAL"}}}}}, "SPIRAL");
  expect_error(json{{"dataset", {{"crop", 30}}}, {"unet", {{"levels", 3}}}}, "divisible");
  expect_error(json{{"sweeps", {{"snr_convention", "db"}}}}, "snr_convention");
  expect_error(json{{"train", {{"lr", -1.0}}}}, "lr");
  expect_error(json{{"output_dir", ""}}, "output_dir");
}

TEST_CASE("patterns and frames follow the dataset") {
  const auto c = parse_config(json{{"dataset", {{"patterns", {"all"}}, {"frames", 10}}}});
  CHECK(c.patterns.size() == 4);
  CHECK(c.unet.frames == 10);
  CHECK(c.train.seed == c.seed);
}

TEST_CASE("overrides") {
  json raw = tiny_json("x");
  apply_override(raw, "train.lr=0.005");
  apply_override(raw, "output_dir=somewhere/else");
  apply_override(raw, "grasp.circular=false");
  apply_override(raw, "sweeps.accel=[10,20]");
  const auto c = parse_config(raw);
  CHECK(c.train.lr == 0.005);
  CHECK(c.output_dir == "somewhere/else");
  CHECK(!c.grasp.circular);
  CHECK(c.sweeps.accel == std::vector<double>{10, 20});
  CHECK_THROWS_AS(apply_override(raw, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(raw, "=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(raw, "seed.deeper=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(raw, "train..lr=3"), ConfigError);
  apply_override(raw, "train.bogus=1");
  CHECK_THROWS_AS(parse_config(raw), ConfigError);
}

TEST_CASE("hash ignores the output directory but not the seed") {
  const auto p = write_config("hash.json", tiny_json("a"));
  const auto a = load_config(p);
  const auto b = load_config(p, {{"output_dir=b"}, std::nullopt});
  const auto c = load_config(p, {{}, 99});
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(c.seed == 99);
  CHECK(c.train.seed == 99);
  CHECK_THROWS_AS(load_config(work_dir() / "nope.json"), ConfigError);
  std::ofstream(work_dir() / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config(work_dir() / "broken.json"), ConfigError);
}

TEST_CASE("command line exit codes and artifacts") {
  const fs::path out = work_dir() / "run";
  fs::remove_all(out);
  const auto cfg = write_config("tiny.json", tiny_json(out));
  const std::string c = "--config " + cfg.string();

  CHECK(run("") == 2);
  CHECK(run("train") == 2);
  CHECK(run("train --config " + (work_dir() / "nope.json").string()) == 2);
  CHECK(run("train " + c + " --set train.bogus=1") == 2);
  CHECK(run("make-dataset " + c, "RECONLAB_SEED=abc") == 2);
  CHECK(run("recon " + c) == 3); // nothing built yet
  CHECK(run("train " + c + " --set train.lr=1e30") == 3);

  REQUIRE(run("make-dataset " + c + " --jobs 1") == 0);
  CHECK(fs::exists(out / "dataset" / "TGA_ROT" / "sample_00000" / "truth.rct"));
  CHECK(fs::exists(out / "dataset" / "TGA_ROT" / "sample_00002" / "kspace.rct"));
  CHECK(fs::exists(out / "manifests" / "make-dataset.json"));
  const auto manifest = json::parse(slurp(out / "manifests" / "make-dataset.json"));
  CHECK(manifest.at("command") == "make-dataset");
  CHECK(manifest.at("files").size() > 0);

  CHECK(run("recon " + c) == 3); // no checkpoint yet
  CHECK(run("train " + c + " --set train.lr=3e38 --set train.epochs=4") == 4);
  REQUIRE(run("train " + c) == 0);
  CHECK(fs::exists(out / "models" / "TGA_ROT" / "net.rlck"));
  CHECK(fs::exists(out / "models" / "TGA_ROT" / "loss.csv"));
  CHECK(fs::exists(out / "models" / "TGA_ROT" / "checkpoints" / "epoch_0002.rlck"));

  REQUIRE(run("recon " + c + " --png") == 0);
  CHECK(fs::exists(out / "recon" / "TGA_ROT" / "metrics.csv"));
  CHECK(fs::exists(out / "recon" / "TGA_ROT" / "summary.json"));
  CHECK(fs::exists(out / "recon" / "TGA_ROT" / "grasp" / "sample_00002.rct"));
  const fs::path cine = out / "recon" / "TGA_ROT" / "unet" / "sample_00002.rct";
  CHECK(fs::exists(cine));

  CHECK(run("compare-patterns " + c) == 3); // only one of four models trained
  REQUIRE(run("sweep " + c + " --axis crop") == 0);
  CHECK(fs::exists(out / "sweeps" / "TGA_ROT" / "crop.csv"));
  CHECK(run("sweep " + c + " --axis sideways") == 2);

  const fs::path frames = work_dir() / "frames";
  fs::remove_all(frames);
  REQUIRE(run("export-frames --input " + cine.string() + " --out " + frames.string()) == 0);
  CHECK(fs::exists(frames / "frame_000.png"));
  CHECK(run("export-frames --input " + (work_dir() / "nothing.rct").string() + " --out " + frames.string()) == 3);
}

TEST_CASE("seed from the environment changes the data") {
  const fs::path a = work_dir() / "seed_a", b = work_dir() / "seed_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto ca = write_config("seed_a.json", tiny_json(a));
  const auto cb = write_config("seed_b.json", tiny_json(b));
  REQUIRE(run("make-dataset --config " + ca.string()) == 0);
  REQUIRE(run("make-dataset --config " + cb.string(), "RECONLAB_SEED=11") == 0);
  const auto f = fs::path("dataset") / "TGA_ROT" / "sample_00000" / "truth.rct";
  CHECK(slurp(a / f) != slurp(b / f));
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "kinterp/config.hpp"

using namespace kinterp;
namespace fs = std::filesystem;

TEST_CASE("presets select coherent scale defaults") {
  RunConfig desk = default_run_config("desk");
  CHECK(desk.train.batch_size == 4);
  CHECK(desk.train.max_epochs == 5);
  CHECK(desk.model.features.base_channels == 16);
  CHECK(desk.model.kernel_size == 3);

  RunConfig full = default_run_config("full");
  CHECK(full.train.batch_size == 8);
  CHECK(full.train.max_epochs == 100);
  CHECK(full.model.features.base_channels == 64);
  CHECK(full.model.kernel_size == 5);

  // The optimizer shape never changes between presets.
  for (const RunConfig* c : {&desk, &full}) {
    CHECK(c->train.beta1 == 0.9f);
    CHECK(c->train.beta2 == 0.999f);
    CHECK(c->train.lr_start == 1e-3f);
    CHECK(c->train.lr_floor == 6.25e-5f);
    CHECK(c->train.lr_decay == 0.5f);
    CHECK(c->train.lr_decay_every == 20);
    CHECK_FALSE(c->train.grad_clip);
  }
  CHECK_THROWS_AS(default_run_config("pocket"), std::invalid_argument);
}

TEST_CASE("learning rate halves every twenty epochs down to its floor") {
  TrainSettings t;  // defaults: 1e-3, x0.5 / 20 epochs, floor 6.25e-5
  CHECK(learning_rate_at(t, 0) == 1e-3f);
  CHECK(learning_rate_at(t, 19) == 1e-3f);
  CHECK(learning_rate_at(t, 20) == 5e-4f);
  CHECK(learning_rate_at(t, 39) == 5e-4f);
  CHECK(learning_rate_at(t, 40) == 2.5e-4f);
  CHECK(learning_rate_at(t, 60) == 1.25e-4f);
  CHECK(learning_rate_at(t, 80) == 6.25e-5f);
  CHECK(learning_rate_at(t, 99) == 6.25e-5f);
  CHECK(learning_rate_at(t, 500) == 6.25e-5f);  // floor holds forever
  CHECK(t.lr_floor == t.lr_start * 0.5f * 0.5f * 0.5f * 0.5f);
  CHECK_THROWS_AS(learning_rate_at(t, -1), std::invalid_argument);
}

TEST_CASE("dotted and nested keys parse identically") {
  RunConfig nested = parse_run_config(R"({"cfse": {"enabled": false}})");
  RunConfig dotted = parse_run_config(R"({"cfse.enabled": false})");
  CHECK_FALSE(nested.model.cfse.enabled);
  CHECK(run_config_to_json(nested) == run_config_to_json(dotted));

  RunConfig r = parse_run_config(R"({
    "regression.mode": "linear_combination",
    "cfse.source_features": "f1f2",
    "cfse.gridnet": "off",
    "train": {"batch_size": 2, "augment": {"temporal_reversal": false}},
    "data.root": "/tmp/somewhere"
  })");
  CHECK(r.model.regression.mode == RegressionMode::linear_combination);
  CHECK(r.model.cfse.sources == CfseSources::f1f2);
  CHECK_FALSE(r.model.cfse.gridnet);
  CHECK(r.train.batch_size == 2);
  CHECK_FALSE(r.train.augment.temporal_reversal);
  CHECK(r.train.augment.horizontal_flip);
  CHECK(r.data.root == "/tmp/somewhere");
}

TEST_CASE("malformed configs are rejected with the offending key") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"cfse.turbo": 1})"),
                       doctest::Contains("cfse.turbo"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"cfse.gridnet": "maybe"})"),
                       doctest::Contains("cfse.gridnet"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train.batch_size": "many"})"),
                       doctest::Contains("train.batch_size"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"regression.mode": "cubic"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"cfse.grid_channels": [8, 16]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[1,2,3]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("{nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"train.batch_size": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"train.lr_decay": 1.5})"), std::invalid_argument);
}

TEST_CASE("the config echo round-trips through the parser") {
  RunConfig cfg = default_run_config("desk");
  cfg.seed = 123;
  cfg.model.regression.mode = RegressionMode::quadratic;
  cfg.model.cfse.enabled = false;
  cfg.model.cfse.grid_channels = {4, 8, 12};
  cfg.train.batch_size = 2;
  cfg.train.grad_clip = true;
  cfg.loss.lambda_d = 0.02f;
  cfg.perceptual.mode = PerceptualMode::disabled;
  cfg.data.root = "scratch/data";
  cfg.data.train_count = 12;

  std::string text = run_config_to_json(cfg);
  RunConfig back = parse_run_config(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(back.model.regression.mode == RegressionMode::quadratic);
  CHECK(back.model.cfse.grid_channels[2] == 12);
  CHECK(back.perceptual.mode == PerceptualMode::disabled);

  std::string full_text = run_config_to_json(default_run_config("full"));
  CHECK(run_config_to_json(parse_run_config(full_text)) == full_text);
}

TEST_CASE("the preset is applied before any override, regardless of key order") {
  RunConfig r = parse_run_config(R"({"train.batch_size": 2, "preset": "full"})");
  CHECK(r.preset == "full");
  CHECK(r.model.features.base_channels == 64);
  CHECK(r.train.batch_size == 2);
  CHECK(r.train.max_epochs == 100);
}

TEST_CASE("configs load from disk and missing files are reported") {
  fs::path p = fs::temp_directory_path() / "kinterp_cfg_test.json";
  {
    std::ofstream out(p.string());
    out << R"({"preset": "desk", "seed": 9, "regression.mode": "linear"})";
  }
  RunConfig r = load_run_config(p.string());
  CHECK(r.seed == 9);
  CHECK(r.model.regression.mode == RegressionMode::linear);
  fs::remove(p);
  CHECK_THROWS_AS(load_run_config(p.string()), std::runtime_error);
}

TEST_CASE("auxiliary settings construct their collaborators") {
  PerceptualSettings ps;
  CHECK(make_perceptual(ps).mode() == PerceptualMode::fixed_random);
  ps.mode = PerceptualMode::disabled;
  CHECK(make_perceptual(ps).mode() == PerceptualMode::disabled);
  ps.mode = PerceptualMode::external_plugin;
  ps.plugin_path = "/nonexistent/filters.bin";
  CHECK_THROWS_AS(make_perceptual(ps), std::runtime_error);

  DataSettings d;
  d.root = "base";
  CHECK(d.train_split_path() == (fs::path("base") / "train.txt").string());
  d.test_split = "/abs/test.txt";
  CHECK(d.test_split_path() == "/abs/test.txt");
  GenerateOptions g = d.generate_options(55);
  CHECK(g.seed == 55);
  CHECK(g.train_count == d.train_count);
  CHECK(g.height == 64);
}

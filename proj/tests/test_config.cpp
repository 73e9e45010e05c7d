#include <doctest.h>

#include "twibridge/config.hpp"
#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"
#include "test_util.hpp"

using namespace twibridge;

TEST_CASE("default config round-trips through JSON") {
  config::RunConfig cfg;
  cfg.seed = 77;
  cfg.plan.lambdas = {0.5, 1.0, 2.0};
  cfg.plan.confidence_threshold = 0.7;
  cfg.corridor.scene_base = std::array<std::uint64_t, kStageCount>{0, 500, 1000, 1500, 2000};
  const auto text = config::to_json_text(cfg);
  const auto back = config::from_json_text(text);
  CHECK(config::to_json_text(back) == text);
  CHECK(back.seed == 77);
  CHECK(back.plan.lambdas[2] == 2.0);
  CHECK(*back.plan.confidence_threshold == 0.7);
}

TEST_CASE("partial configs keep defaults") {
  const auto cfg = config::from_json_text(R"({"seed": 3, "corridor": {"stages": {"night": {"noise_sigma": 0.08}}}})");
  CHECK(cfg.seed == 3);
  CHECK(cfg.corridor.stages[4].noise_sigma == 0.08);
  CHECK(cfg.corridor.stages[4].brightness == 0.12);
  CHECK(cfg.corridor.counts[0] == 200);
}

TEST_CASE("default learning rate is the base rate times the multiplier") {
  const config::RunConfig cfg;
  CHECK(cfg.training.base_learning_rate == 5e-5);
  const auto plan = cfg.resolved_plan();
  CHECK(plan.day_sgd.learning_rate == cfg.training.base_learning_rate * cfg.training.lr_multiplier);
  CHECK(plan.adapt_sgd.learning_rate == plan.day_sgd.learning_rate);
  CHECK(plan.day_sgd.batch_size == 1);
}

TEST_CASE("component seeds derive from the master seed") {
  config::RunConfig cfg;
  cfg.seed = 9;
  CHECK(cfg.resolved_corridor().master_seed == derive_seed(9, "corridor"));
  CHECK(cfg.resolved_plan().seed == derive_seed(9, "adaptation"));
  CHECK(cfg.resolved_corridor().master_seed != cfg.resolved_plan().seed);
}

TEST_CASE("malformed configs raise config errors") {
  CHECK_THROWS_AS(config::from_json_text("{"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"sead": 1})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"seed": "one"})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"adaptation": {"lambdas": [1, -1, 1]}})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"adaptation": {"mode": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"training": {"lr_multiplier": 0}})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"thresholds": {"civil_min": 1}})"), ConfigError);
  CHECK_THROWS_AS(config::from_json_text(R"({"corridor": {"counts": {"day": 0}}})"), ConfigError);
  CHECK_THROWS_AS(config::load("/nonexistent/config.json"), IoError);
}

TEST_CASE("save then load reproduces the config") {
  const test::TempDir dir("config");
  config::RunConfig cfg;
  cfg.training.adapt_epochs = 4;
  config::save(cfg, dir.path / "sub" / "config.json");
  CHECK(config::to_json_text(config::load(dir.path / "sub" / "config.json")) == config::to_json_text(cfg));
}

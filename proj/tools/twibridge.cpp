#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "twibridge/app.hpp"
#include "twibridge/errors.hpp"

using namespace twibridge;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::optional<std::string> mode;
  std::optional<double> lambda1, lambda2, lambda3;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run config; defaults apply when omitted");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "run directory (created when missing)")->capture_default_str();
}

void add_training(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--mode", o.mode, "three-step, one-step or none");
  cmd->add_option("--lambda1", o.lambda1, "civil sampling weight");
  cmd->add_option("--lambda2", o.lambda2, "nautical sampling weight");
  cmd->add_option("--lambda3", o.lambda3, "astronomical sampling weight");
  cmd->add_option("--epochs", o.epochs, "epochs for daytime training and every fine-tuning step");
  cmd->add_option("--lr", o.lr, "learning rate, replacing base rate times multiplier");
}

config::RunConfig resolve(const Overrides& o) {
  config::RunConfig cfg = o.config_path.empty() ? config::RunConfig{} : config::load(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.mode) cfg.plan.mode = adaptation::parse_mode(*o.mode);
  if (o.lambda1) cfg.plan.lambdas[0] = *o.lambda1;
  if (o.lambda2) cfg.plan.lambdas[1] = *o.lambda2;
  if (o.lambda3) cfg.plan.lambdas[2] = *o.lambda3;
  if (o.epochs) cfg.training.day_epochs = cfg.training.adapt_epochs = *o.epochs;
  if (o.lr) {
    cfg.training.base_learning_rate = *o.lr;
    cfg.training.lr_multiplier = 1.0;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradual day-to-night segmentation adaptation on a synthetic twilight corridor"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen", "generate the corridor: manifests, images, labels");
  add_common(gen, o);

  auto* train = app.add_subcommand("train", "train the daytime model phi0");
  add_common(train, o);
  add_training(train, o);

  auto* adapt = app.add_subcommand("adapt", "run three-step, one-step or no adaptation");
  add_common(adapt, o);
  add_training(adapt, o);

  auto* ev = app.add_subcommand("eval", "score checkpoints on the night test set");
  add_common(ev, o);
  std::vector<std::string> models;
  std::string test_manifest;
  ev->add_option("--models", models, "checkpoint names (default: all present)");
  ev->add_option("--test", test_manifest, "labeled manifest to score instead of manifests/night.tsv");

  auto* part = app.add_subcommand("partition", "split timestamped frames into the five illumination stages");
  add_common(part, o);
  std::string frames;
  part->add_option("--frames", frames, "CSV: id,iso8601_utc,lat_deg,lon_deg")->required();

  auto* report = app.add_subcommand("report", "per-seed night mIoU table for both adaptation modes");
  add_common(report, o);
  add_training(report, o);
  std::vector<std::uint64_t> seeds;
  report->add_option("--seeds", seeds, "seeds to run (default: report_seeds from the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::Config);
  }

  try {
    auto cfg = resolve(o);
    if (*gen) {
      app::cmd_gen(cfg, o.out);
      std::printf("corridor written to %s\n", o.out.c_str());
    } else if (*train) {
      app::cmd_train(cfg, o.out);
      std::printf("phi0 written to %s\n", app::RunLayout{o.out}.checkpoint("phi0").c_str());
    } else if (*adapt) {
      const auto set = app::cmd_adapt(cfg, o.out);
      for (const auto& m : set.models) std::printf("%s\n", app::RunLayout{o.out}.checkpoint(m.name).c_str());
    } else if (*ev) {
      std::optional<std::filesystem::path> tm;
      if (!test_manifest.empty()) tm = test_manifest;
      const auto rows = app::cmd_eval(cfg, o.out, models, tm);
      std::cout << eval::render_table(rows);
    } else if (*part) {
      const auto p = app::cmd_partition(cfg, frames, o.out);
      for (DomainStage s : kAllStages) std::printf("%-13s %zu\n", std::string(stage_name(s)).c_str(), p.counts[stage_index(s)]);
    } else if (*report) {
      if (!seeds.empty()) cfg.report_seeds = seeds;
      const auto results = app::cmd_report(cfg, o.out);
      std::cout << app::seeds_table(results);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "twibridge: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "twibridge: %s\n", e.what());
    return static_cast<int>(ErrorKind::Io);
  }
  return 0;
}

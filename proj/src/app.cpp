#include "twibridge/app.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "twibridge/checkpoint.hpp"
#include "twibridge/errors.hpp"
#include "twibridge/pnm.hpp"
#include "twibridge/segnet.hpp"

namespace twibridge::app {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_provenance(const RunLayout& lay, const std::vector<adaptation::ProvenanceRecord>& records) {
  std::string text;
  for (const auto& r : records) text += r.to_line() + "\n";
  write_text(lay.provenance_log(), text);
}

void save_models(const RunLayout& lay, const adaptation::StageCheckpointSet& set) {
  fs::create_directories(lay.checkpoints());
  for (const auto& m : set.models) checkpoint::save(lay.checkpoint(m.name), m.params);
}

}  // namespace

const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = {"phi0", "phi1", "phi2", "phi3", "one_step"};
  return names;
}

corridor::Corridor load_corridor(const fs::path& root) {
  corridor::Corridor cor;
  for (DomainStage s : kAllStages) {
    const auto path = corridor::manifest_path(root, s);
    if (!fs::exists(path)) {
      throw IoError("no corridor at " + root.string() + " (missing " + path.filename().string() +
                    "); run `twibridge gen --out " + root.string() + "` first");
    }
  }
  cor.day = corridor::read_manifest(corridor::manifest_path(root, DomainStage::Day), root);
  cor.civil = corridor::read_manifest(corridor::manifest_path(root, DomainStage::Civil), root);
  cor.nautical = corridor::read_manifest(corridor::manifest_path(root, DomainStage::Nautical), root);
  cor.astronomical = corridor::read_manifest(corridor::manifest_path(root, DomainStage::Astronomical), root);
  cor.night_test = corridor::read_manifest(corridor::manifest_path(root, DomainStage::Night), root);
  return cor;
}

void cmd_gen(const config::RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const RunLayout lay{out};
  fs::create_directories(out);
  const auto cor = corridor::build_corridor(cfg.resolved_corridor());
  corridor::write_corridor(cor, out);
  config::save(cfg, lay.config_json());
}

adaptation::StageCheckpointSet cmd_train(const config::RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const RunLayout lay{out};
  const auto cor = load_corridor(out);
  auto plan = cfg.resolved_plan();
  plan.mode = adaptation::Mode::None;
  auto set = adaptation::run_adaptation(cor, plan);
  save_models(lay, set);
  write_provenance(lay, set.provenance);
  config::save(cfg, lay.config_json());
  return set;
}

adaptation::StageCheckpointSet cmd_adapt(const config::RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const RunLayout lay{out};
  const auto cor = load_corridor(out);
  const auto plan = cfg.resolved_plan();
  std::optional<segnet::ModelParams> phi0;
  if (fs::exists(lay.checkpoint("phi0"))) {
    phi0 = checkpoint::load(lay.checkpoint("phi0"));
    if (phi0->class_count != plan.class_count || phi0->patch_radius != plan.patch_radius) {
      throw ConfigError("checkpoints/phi0.twbr does not match the configured class count or patch radius");
    }
  }
  auto set = adaptation::run_adaptation(cor, plan, phi0);
  save_models(lay, set);
  const auto pseudo_root = lay.pseudo(plan.mode);
  if (!set.pseudo_labeled.empty()) {
    fs::remove_all(pseudo_root);
    for (const auto& ds : set.pseudo_labeled) corridor::write_manifest(ds, pseudo_root, true);
  }
  write_provenance(lay, set.provenance);
  config::save(cfg, lay.config_json());
  return set;
}

std::vector<eval::ReportRow> cmd_eval(const config::RunConfig& cfg, const fs::path& out,
                                      const std::vector<std::string>& models,
                                      const std::optional<fs::path>& test_manifest) {
  cfg.validate();
  const RunLayout lay{out};
  std::vector<std::string> names = models;
  if (names.empty()) {
    for (const auto& n : known_models())
      if (fs::exists(lay.checkpoint(n))) names.push_back(n);
    if (names.empty()) throw IoError("no checkpoints under " + lay.checkpoints().string() + "; run adapt first");
  }
  const auto manifest = test_manifest.value_or(corridor::manifest_path(out, DomainStage::Night));
  if (!fs::exists(manifest)) throw IoError("test manifest " + manifest.string() + " not found; run gen first");
  const auto test = corridor::read_manifest(manifest, out);
  if (!test.fully_labeled()) throw ConfigError("test manifest " + manifest.string() + " lacks ground truth");

  std::size_t max_label = 0;
  for (const auto& s : test.samples)
    for (auto l : s.labels->labels)
      if (l != kVoid) max_label = std::max<std::size_t>(max_label, l);

  std::vector<std::pair<std::string, eval::IoUReport>> entries;
  for (const auto& name : names) {
    const auto path = lay.checkpoint(name);
    if (!fs::exists(path)) throw IoError("checkpoint " + path.string() + " not found");
    const auto model = checkpoint::load(path);
    if (max_label >= model.class_count) {
      throw ConfigError("checkpoint " + name + " has " + std::to_string(model.class_count) +
                        " classes but the test labels use class " + std::to_string(max_label));
    }
    const auto pred_dir = lay.reports() / "predictions" / name;
    fs::create_directories(pred_dir);
    eval::ConfusionMatrix cm(model.class_count);
    for (const auto& s : test.samples) {
      const auto pred = segnet::predict_labels(model, s.image);
      eval::accumulate(cm, *s.labels, pred);
      pnm::write_ppm(pred_dir / (s.id + ".ppm"), corridor::render_labels(pred));
    }
    entries.emplace_back(name, eval::iou_report(cm));
  }
  auto rows = eval::compare_report(entries);
  write_text(lay.reports() / "eval.csv", eval::to_csv(rows));
  write_text(lay.reports() / "eval.txt", eval::render_table(rows));
  config::save(cfg, lay.config_json());
  return rows;
}

solar::Partition cmd_partition(const config::RunConfig& cfg, const fs::path& frames_csv, const fs::path& out) {
  cfg.thresholds.validate();
  std::ifstream in(frames_csv);
  if (!in) throw IoError("cannot read frames file " + frames_csv.string());
  const auto frames = solar::parse_frames_csv(in);
  auto part = solar::partition_manifest(frames, cfg.thresholds);
  solar::write_partition(part, out / "partition", out / "partition" / "counts.csv");
  config::save(cfg, RunLayout{out}.config_json());
  return part;
}

std::string seeds_table(const std::vector<experiment::SeedResult>& results) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s %8s\n", "seed", "phi0", "phi1", "phi2", "phi3", "one_step");
  o << buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-6llu %8.2f %8.2f %8.2f %8.2f %8.2f\n", static_cast<unsigned long long>(r.seed),
                  100 * r.miou("phi0"), 100 * r.miou("phi1"), 100 * r.miou("phi2"), 100 * r.miou("phi3"),
                  100 * r.miou("one_step"));
    o << buf;
  }
  return o.str();
}

std::vector<experiment::SeedResult> cmd_report(const config::RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  const RunLayout lay{out};
  std::vector<experiment::SeedResult> results;
  for (auto seed : cfg.report_seeds) {
    auto r = experiment::run_seed(cfg.corridor, cfg.resolved_plan(), seed);
    // Keep the summary, drop the bulky per-stage datasets.
    r.gradual.pseudo_labeled.clear();
    r.one_step.pseudo_labeled.clear();
    results.push_back(std::move(r));
  }
  write_text(lay.reports() / "seeds.csv", experiment::seeds_csv(results));
  write_text(lay.reports() / "seeds.txt", seeds_table(results));
  config::save(cfg, lay.config_json());
  return results;
}

}  // namespace twibridge::app

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twibridge/adaptation.hpp"
#include "twibridge/config.hpp"
#include "twibridge/corridor.hpp"
#include "twibridge/eval.hpp"
#include "twibridge/experiment.hpp"

// Subcommand implementations behind the command-line tool. Every command
// archives the effective configuration as <out>/config.json.
namespace twibridge::app {

namespace fs = std::filesystem;

struct RunLayout {
  fs::path root;

  fs::path manifests() const { return root / "manifests"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path reports() const { return root / "reports"; }
  fs::path pseudo(adaptation::Mode m) const { return root / "pseudo" / std::string(adaptation::mode_name(m)); }
  fs::path provenance_log() const { return root / "provenance.log"; }
  fs::path config_json() const { return root / "config.json"; }
  fs::path checkpoint(const std::string& model) const { return checkpoints() / (model + ".twbr"); }
};

// Model names in report order.
const std::vector<std::string>& known_models();

// Reads the five manifests below root. Throws IoError naming the gen
// command when the corridor is missing.
corridor::Corridor load_corridor(const fs::path& root);

void cmd_gen(const config::RunConfig& cfg, const fs::path& out);

// Trains phi0 and writes checkpoints/phi0.twbr and provenance.log.
adaptation::StageCheckpointSet cmd_train(const config::RunConfig& cfg, const fs::path& out);

// Reuses checkpoints/phi0.twbr when present. Writes the mode's checkpoints,
// its pseudo-labeled manifests and provenance.log.
adaptation::StageCheckpointSet cmd_adapt(const config::RunConfig& cfg, const fs::path& out);

// Evaluates the named checkpoints (all present ones when empty) on the
// night test manifest, or on `test_manifest` when given. Writes
// reports/eval.csv, reports/eval.txt and reports/predictions/<model>/.
std::vector<eval::ReportRow> cmd_eval(const config::RunConfig& cfg, const fs::path& out,
                                      const std::vector<std::string>& models,
                                      const std::optional<fs::path>& test_manifest = std::nullopt);

// Writes <out>/partition/<stage>.csv and <out>/partition/counts.csv.
solar::Partition cmd_partition(const config::RunConfig& cfg, const fs::path& frames_csv, const fs::path& out);

// Runs both adaptation modes for each report seed on a fresh corridor and
// writes reports/seeds.csv and reports/seeds.txt.
std::vector<experiment::SeedResult> cmd_report(const config::RunConfig& cfg, const fs::path& out);

std::string seeds_table(const std::vector<experiment::SeedResult>& results);

}  // namespace twibridge::app

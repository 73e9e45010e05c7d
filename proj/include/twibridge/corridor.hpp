#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twibridge/image.hpp"
#include "twibridge/stage.hpp"

namespace twibridge::corridor {

// Per-stage appearance change: out = clamp((b*in)^g + glare + N(0, noise^2)).
struct StageDegradation {
  double brightness = 1.0;
  double gamma = 1.0;
  double noise_sigma = 0.0;
  unsigned glare_max = 0;  // blob count drawn uniformly from [0, glare_max]
};

struct CorridorConfig {
  std::size_t class_count = 5;
  std::size_t height = 32;
  std::size_t width = 32;
  // l0..l3 and the night test count.
  std::array<std::size_t, kStageCount> counts = {200, 200, 200, 200, 50};
  std::array<StageDegradation, kStageCount> stages = {{
      {1.0, 1.0, 0.0, 0},
      {0.6, 1.2, 0.01, 0},
      {0.35, 1.5, 0.02, 0},
      {0.2, 1.8, 0.03, 0},
      {0.12, 2.2, 0.05, 3},
  }};
  double glare_amplitude_min = 0.3;
  double glare_amplitude_max = 0.6;
  double glare_sigma_min = 1.5;
  double glare_sigma_max = 4.0;
  double color_jitter = 0.04;
  // Per-scene exposure drawn from [exposure_min, 1] scales the class colors.
  double exposure_min = 1.0;
  std::uint64_t master_seed = 0;
  // First scene index of each split; scene i of split s uses index
  // scene_base[s] + i. Defaults to back-to-back ranges.
  std::optional<std::array<std::uint64_t, kStageCount>> scene_base;

  std::array<std::uint64_t, kStageCount> resolved_scene_base() const;
  // Throws ConfigError.
  void validate() const;
};

struct Scene {
  Image image;
  LabelMap labels;
};

struct Sample {
  Image image;
  std::optional<LabelMap> labels;
  DomainStage stage = DomainStage::Day;
  std::string id;
};

struct Dataset {
  std::string name;
  DomainStage stage = DomainStage::Day;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool fully_labeled() const;
};

struct Corridor {
  Dataset day;
  Dataset civil;
  Dataset nautical;
  Dataset astronomical;
  Dataset night_test;
  // Generator ground truth for the unlabeled twilight splits. Never written
  // to manifests; used only to measure pseudo-label quality.
  std::array<std::vector<LabelMap>, 3> twilight_truth;

  const Dataset& split(DomainStage s) const;
};

// Daytime appearance of class c.
std::array<double, 3> class_color(std::size_t c);
// Display palette for rendered label maps.
std::array<std::uint8_t, 3> palette_color(std::size_t c);

std::uint64_t scene_seed(std::uint64_t master_seed, std::uint64_t scene_index);

Scene generate_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t class_count,
                     double jitter = 0.04, double exposure_min = 1.0);

Image degrade(const Image& image, DomainStage stage, const CorridorConfig& config, std::uint64_t seed);

Corridor build_corridor(const CorridorConfig& config);

// FNV-1a over ids, quantized pixels and labels.
std::string dataset_hash(const Dataset& ds);

// Disk layout below `root`: images/<id>.ppm, images/<id>.pgm and
// manifests/<stage>.tsv with records "id\tstage\timage[\tlabels]".
void write_corridor(const Corridor& corridor, const std::filesystem::path& root);
void write_manifest(const Dataset& ds, const std::filesystem::path& root, bool with_labels);
Dataset read_manifest(const std::filesystem::path& manifest, const std::filesystem::path& root);
std::filesystem::path manifest_path(const std::filesystem::path& root, DomainStage stage);

Image render_labels(const LabelMap& labels);

}  // namespace twibridge::corridor

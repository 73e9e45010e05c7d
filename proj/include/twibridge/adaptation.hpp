#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twibridge/corridor.hpp"
#include "twibridge/segnet.hpp"

namespace twibridge::adaptation {

using corridor::Dataset;
using segnet::ModelParams;

enum class Mode { ThreeStep, OneStep, None };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);  // "three-step" | "one-step" | "none"

struct AdaptationPlan {
  std::size_t class_count = 5;
  std::size_t patch_radius = 2;
  // Sampling weights of the civil, nautical and astronomical sets relative to
  // the daytime set, which always carries weight 1.
  std::array<double, 3> lambdas = {1.0, 1.0, 1.0};
  segnet::SgdConfig day_sgd{};
  segnet::SgdConfig adapt_sgd{};
  // Draws per fine-tuning epoch; 0 means 4 * |D0|.
  std::size_t stream_length = 0;
  Mode mode = Mode::ThreeStep;
  std::uint64_t seed = 0;
  // Pseudo-label pixels whose top softmax probability falls below this become
  // VOID. Off by default.
  std::optional<double> confidence_threshold;

  void validate() const;
};

// One line of the replay log.
struct ProvenanceRecord {
  std::string stage;
  std::string operation;
  std::string model;
  std::string model_hash;
  std::string parent = "-";
  std::string parent_hash = "-";
  std::string datasets;
  std::string dataset_hash;
  std::string output_hash = "-";
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t draws = 0;

  std::string to_line() const;
  static ProvenanceRecord parse(const std::string& line);
  bool operator==(const ProvenanceRecord&) const = default;
};

struct NamedModel {
  std::string name;
  ModelParams params;
};

struct StageCheckpointSet {
  // phi0..phi3 for three-step, phi0 + one_step for one-step, phi0 for none.
  std::vector<NamedModel> models;
  std::vector<Dataset> pseudo_labeled;
  std::vector<ProvenanceRecord> provenance;
  std::vector<double> day_epoch_losses;

  const ModelParams& model(std::string_view name) const;
};

struct TrainResult {
  ModelParams model;
  double initial_loss = 0.0;  // mean loss of the freshly initialized model
  std::vector<double> epoch_losses;
};

// Mean per-sample loss over a labeled dataset; degenerate samples skipped.
double mean_loss(const ModelParams& model, const Dataset& ds);

// Supervised daytime training from init_model(seed), one shuffled pass per
// epoch. Throws ProtocolError on an unlabeled sample.
TrainResult train_daytime(const Dataset& day, const segnet::SgdConfig& sgd, std::uint64_t seed,
                          std::size_t class_count, std::size_t patch_radius = 2);

// Replaces every sample's labels by the model's argmax map.
Dataset pseudo_label(const ModelParams& model, const Dataset& ds,
                     std::optional<double> confidence_threshold = std::nullopt);

struct StreamDraw {
  std::size_t dataset = 0;
  std::size_t sample = 0;
};

// Draw i picks dataset k with probability w_k / sum(w), then a sample
// uniformly with replacement. Empty datasets count as weight zero.
std::vector<StreamDraw> mixed_stream(std::span<const Dataset* const> datasets, std::span<const double> weights,
                                     std::size_t length, std::uint64_t seed);

std::vector<segnet::LabeledRef> resolve_stream(std::span<const Dataset* const> datasets,
                                               std::span<const StreamDraw> draws);

struct AdaptResult {
  ModelParams model;
  std::vector<double> epoch_losses;
  std::size_t draws = 0;
};

// Fine-tunes a copy of prev_model on the hybrid stream; labeled_sets[0] must
// be the human-labeled daytime set.
AdaptResult adapt_step(const ModelParams& prev_model, std::span<const Dataset* const> labeled_sets,
                       std::span<const double> weights, const AdaptationPlan& plan, std::uint64_t seed);

// Twilight splits must be unlabeled. When phi0 is supplied it is used
// instead of training a daytime model.
StageCheckpointSet run_gradual(const corridor::Corridor& cor, const AdaptationPlan& plan,
                               const std::optional<ModelParams>& phi0 = std::nullopt);
StageCheckpointSet run_one_step(const corridor::Corridor& cor, const AdaptationPlan& plan,
                                const std::optional<ModelParams>& phi0 = std::nullopt);
// Dispatches on plan.mode.
StageCheckpointSet run_adaptation(const corridor::Corridor& cor, const AdaptationPlan& plan,
                                  const std::optional<ModelParams>& phi0 = std::nullopt);

}  // namespace twibridge::adaptation

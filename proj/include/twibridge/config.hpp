#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "twibridge/adaptation.hpp"
#include "twibridge/corridor.hpp"
#include "twibridge/solar.hpp"

namespace twibridge::config {

using segnet::kBaseLearningRate;
using segnet::kDefaultLrMultiplier;

struct TrainingConfig {
  double base_learning_rate = kBaseLearningRate;
  double lr_multiplier = kDefaultLrMultiplier;
  std::size_t batch_size = 1;
  std::size_t day_epochs = 10;
  std::size_t adapt_epochs = 10;
  std::uint64_t shuffle_seed = 0;

  double learning_rate() const { return base_learning_rate * lr_multiplier; }
};

// Everything a run needs. corridor.master_seed and plan.seed are not read
// from here; both derive from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  corridor::CorridorConfig corridor;
  TrainingConfig training;
  adaptation::AdaptationPlan plan;  // sgd fields are filled from `training`
  solar::StageThresholds thresholds;
  std::vector<std::uint64_t> report_seeds = {0, 1, 2, 3, 4};

  // Throws ConfigError.
  void validate() const;

  // Seeded copies of the component configs.
  corridor::CorridorConfig resolved_corridor() const;
  adaptation::AdaptationPlan resolved_plan() const;
};

std::uint64_t corridor_seed(std::uint64_t master);
std::uint64_t adaptation_seed(std::uint64_t master);

// Strict: unknown keys and wrong types raise ConfigError. Missing keys keep
// their defaults.
RunConfig from_json_text(const std::string& text);
std::string to_json_text(const RunConfig& cfg);

RunConfig load(const std::filesystem::path& path);
void save(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace twibridge::config

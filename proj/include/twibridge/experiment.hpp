#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twibridge/adaptation.hpp"
#include "twibridge/corridor.hpp"
#include "twibridge/eval.hpp"

namespace twibridge::experiment {

// Confusion matrix of `model` over every labeled sample of `ds`.
eval::ConfusionMatrix confusion(const segnet::ModelParams& model, const corridor::Dataset& ds);
eval::IoUReport evaluate_model(const segnet::ModelParams& model, const corridor::Dataset& ds);

// Fraction of pixels where pseudo labels equal the hidden generator labels.
double label_agreement(const corridor::Dataset& pseudo, const std::vector<LabelMap>& truth);

struct SeedResult {
  std::uint64_t seed = 0;
  // phi0, phi1, phi2, phi3, one_step in that order.
  std::vector<std::pair<std::string, eval::IoUReport>> night;
  std::array<double, 3> pseudo_agreement{};  // three-step, per twilight stage
  adaptation::StageCheckpointSet gradual;
  adaptation::StageCheckpointSet one_step;

  double miou(std::string_view name) const;
};

// Builds the corridor, trains phi0 once and runs both adaptation modes from it.
SeedResult run_seed(const corridor::CorridorConfig& corridor, const adaptation::AdaptationPlan& plan,
                    std::uint64_t seed);

// Per-seed mean IoU table: "seed,phi0,phi1,phi2,phi3,one_step".
std::string seeds_csv(const std::vector<SeedResult>& results);

}  // namespace twibridge::experiment

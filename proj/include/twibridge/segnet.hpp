#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "twibridge/image.hpp"

namespace twibridge::segnet {

// Linear pixel classifier over a zero-padded (2r+1)x(2r+1) patch plus bias.
// Weights are stored row-major as [class_count x feature_count()], the bias
// occupying the last column of each row.
struct ModelParams {
  std::size_t class_count = 0;
  std::size_t patch_radius = 0;
  std::size_t channels = 0;
  std::uint64_t rng_seed = 0;  // not persisted in checkpoints
  std::vector<double> weights;

  std::size_t patch_side() const { return 2 * patch_radius + 1; }
  std::size_t feature_count() const { return patch_side() * patch_side() * channels + 1; }

  double& weight(std::size_t cls, std::size_t feature) { return weights[cls * feature_count() + feature]; }
  double weight(std::size_t cls, std::size_t feature) const { return weights[cls * feature_count() + feature]; }

  bool same_shape(const ModelParams& o) const {
    return class_count == o.class_count && patch_radius == o.patch_radius && channels == o.channels;
  }
  // Shape and weights; rng_seed is provenance only.
  bool operator==(const ModelParams& o) const { return same_shape(o) && weights == o.weights; }
};

inline constexpr double kBaseLearningRate = 5e-5;
inline constexpr double kDefaultLrMultiplier = 1e4;

struct SgdConfig {
  double learning_rate = kBaseLearningRate * kDefaultLrMultiplier;
  std::size_t batch_size = 1;
  std::size_t epochs = 10;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

// [H x W x C] logits, pixel-major.
struct ScoreMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t class_count = 0;
  std::vector<double> scores;

  double at(std::size_t y, std::size_t x, std::size_t c) const { return scores[(y * width + x) * class_count + c]; }
  std::span<const double> pixel(std::size_t p) const { return {scores.data() + p * class_count, class_count}; }
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as ModelParams::weights
  std::size_t supervised_pixels = 0;
};

struct LabeledRef {
  const Image* image;
  const LabelMap* labels;
};

struct EpochResult {
  ModelParams model;
  double mean_loss = 0.0;  // mean pre-update loss over non-degenerate samples
  std::size_t skipped = 0;
};

ModelParams init_model(std::size_t class_count, std::size_t patch_radius, std::size_t channels, std::uint64_t seed);

// Fills `out` (length feature_count()) with the patch centered at (y, x).
void extract_features(const ModelParams& model, const Image& image, std::size_t y, std::size_t x,
                      std::span<double> out);

ScoreMap predict_logits(const ModelParams& model, const Image& image);

// Argmax with ties resolved toward the lowest class id.
std::uint8_t argmax_label(std::span<const double> logits);

LabelMap predict_labels(const ModelParams& model, const Image& image);

// Softmax probabilities of one pixel's logits, max-subtracted.
void softmax(std::span<const double> logits, std::span<double> probs);

// Mean softmax cross-entropy over non-void pixels and its gradient.
LossGrad loss_and_grad(const ModelParams& model, const Image& image, const LabelMap& labels);

// One pass over `stream` in order, updating w <- w - lr * grad per mini-batch.
EpochResult sgd_epoch(const ModelParams& model, std::span<const LabeledRef> stream, const SgdConfig& config);

inline ModelParams clone_model(const ModelParams& model) { return model; }

}  // namespace twibridge::segnet

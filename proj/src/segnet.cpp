#include "twibridge/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::segnet {
namespace {

void check_channels(const ModelParams& model, const Image& image) {
  if (image.channels != model.channels) {
    throw ShapeError("image has " + std::to_string(image.channels) + " channels, model expects " +
                     std::to_string(model.channels));
  }
  if (image.data.size() != image.pixel_count() * image.channels) throw ShapeError("malformed image buffer");
}

void pixel_logits(const ModelParams& model, std::span<const double> features, std::span<double> out) {
  const std::size_t nf = model.feature_count();
  for (std::size_t c = 0; c < model.class_count; ++c) {
    const double* w = model.weights.data() + c * nf;
    double s = 0.0;
    for (std::size_t f = 0; f < nf; ++f) s += w[f] * features[f];
    out[c] = s;
  }
}

}  // namespace

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

ModelParams init_model(std::size_t class_count, std::size_t patch_radius, std::size_t channels, std::uint64_t seed) {
  if (class_count < 2) throw ConfigError("class_count must be >= 2");
  if (class_count > kVoid) throw ConfigError("class_count must be < 255");
  if (channels == 0) throw ConfigError("channels must be >= 1");
  ModelParams m;
  m.class_count = class_count;
  m.patch_radius = patch_radius;
  m.channels = channels;
  m.rng_seed = seed;
  m.weights.resize(class_count * m.feature_count());
  Rng rng(seed);
  for (double& w : m.weights) w = rng.uniform(-0.01, 0.01);
  return m;
}

void extract_features(const ModelParams& model, const Image& image, std::size_t y, std::size_t x,
                      std::span<double> out) {
  const auto r = static_cast<std::ptrdiff_t>(model.patch_radius);
  const auto h = static_cast<std::ptrdiff_t>(image.height);
  const auto w = static_cast<std::ptrdiff_t>(image.width);
  const std::size_t ch = image.channels;
  std::size_t k = 0;
  for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
    const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
    for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
      const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
      if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
        for (std::size_t c = 0; c < ch; ++c) out[k++] = 0.0;
      } else {
        const double* px = image.data.data() + (static_cast<std::size_t>(yy) * image.width + static_cast<std::size_t>(xx)) * ch;
        for (std::size_t c = 0; c < ch; ++c) out[k++] = px[c];
      }
    }
  }
  out[k] = 1.0;
}

ScoreMap predict_logits(const ModelParams& model, const Image& image) {
  check_channels(model, image);
  ScoreMap sm{image.height, image.width, model.class_count, {}};
  sm.scores.resize(image.pixel_count() * model.class_count);
  std::vector<double> feat(model.feature_count());
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      extract_features(model, image, y, x, feat);
      pixel_logits(model, feat, {sm.scores.data() + (y * image.width + x) * model.class_count, model.class_count});
    }
  }
  return sm;
}

std::uint8_t argmax_label(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return static_cast<std::uint8_t>(best);
}

LabelMap predict_labels(const ModelParams& model, const Image& image) {
  const ScoreMap sm = predict_logits(model, image);
  LabelMap out(image.height, image.width);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) out.labels[p] = argmax_label(sm.pixel(p));
  return out;
}

void softmax(std::span<const double> logits, std::span<double> probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - mx);
    z += probs[c];
  }
  for (double& p : probs) p /= z;
}

LossGrad loss_and_grad(const ModelParams& model, const Image& image, const LabelMap& labels) {
  check_channels(model, image);
  if (labels.height != image.height || labels.width != image.width) {
    throw ShapeError("label map dimensions do not match image");
  }
  const std::size_t nc = model.class_count;
  const std::size_t nf = model.feature_count();
  LossGrad out;
  out.gradient.assign(model.weights.size(), 0.0);
  std::vector<double> feat(nf), logits(nc), probs(nc);

  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const std::uint8_t gt = labels.at(y, x);
      if (gt == kVoid) continue;
      if (gt >= nc) throw ShapeError("label " + std::to_string(gt) + " out of range");
      extract_features(model, image, y, x, feat);
      pixel_logits(model, feat, logits);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        probs[c] = std::exp(logits[c] - mx);
        z += probs[c];
      }
      // -log softmax(gt) = log z + mx - logit[gt]
      out.loss += std::log(z) + mx - logits[gt];
      for (std::size_t c = 0; c < nc; ++c) {
        const double delta = probs[c] / z - (c == gt ? 1.0 : 0.0);
        double* g = out.gradient.data() + c * nf;
        for (std::size_t f = 0; f < nf; ++f) g[f] += delta * feat[f];
      }
      ++out.supervised_pixels;
    }
  }
  if (out.supervised_pixels == 0) throw DegenerateInputError("every pixel is void");
  const double inv = 1.0 / static_cast<double>(out.supervised_pixels);
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  return out;
}

EpochResult sgd_epoch(const ModelParams& model, std::span<const LabeledRef> stream, const SgdConfig& config) {
  // A zero step is allowed here; plans still require a positive rate.
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
    throw ConfigError("learning_rate must be finite and >= 0");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (stream.empty()) throw ConfigError("training stream is empty");
  EpochResult res{clone_model(model), 0.0, 0};
  std::vector<double> batch_grad(model.weights.size(), 0.0);
  std::size_t in_batch = 0;
  std::size_t used = 0;

  auto apply = [&] {
    if (in_batch == 0) return;
    const double scale = config.learning_rate / static_cast<double>(in_batch);
    for (std::size_t i = 0; i < batch_grad.size(); ++i) {
      res.model.weights[i] -= scale * batch_grad[i];
      batch_grad[i] = 0.0;
    }
    in_batch = 0;
  };

  for (std::size_t i = 0; i < stream.size(); ++i) {
    LossGrad lg;
    try {
      lg = loss_and_grad(res.model, *stream[i].image, *stream[i].labels);
    } catch (const DegenerateInputError&) {
      ++res.skipped;
      continue;
    }
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError(i, "non-finite loss at stream sample " + std::to_string(i));
    }
    res.mean_loss += lg.loss;
    ++used;
    for (std::size_t k = 0; k < batch_grad.size(); ++k) batch_grad[k] += lg.gradient[k];
    if (++in_batch == config.batch_size) apply();
  }
  apply();
  for (double w : res.model.weights) {
    if (!std::isfinite(w)) throw DivergenceError(stream.size(), "weights became non-finite");
  }
  if (used > 0) res.mean_loss /= static_cast<double>(used);
  return res;
}

}  // namespace twibridge::segnet

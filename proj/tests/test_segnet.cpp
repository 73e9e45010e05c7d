#include <doctest.h>

#include <cmath>
#include <vector>

#include "twibridge/checkpoint.hpp"
#include "twibridge/corridor.hpp"
#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"
#include "twibridge/segnet.hpp"
#include "oracles.hpp"

using namespace twibridge;
using segnet::ModelParams;
using namespace twibridge::test;

namespace {

corridor::Scene two_class_scene() { return corridor::generate_scene(11, 16, 16, 2); }

}  // namespace

TEST_CASE("init_model is deterministic and shaped by radius, channels and classes") {
  const auto a = segnet::init_model(5, 2, 3, 7);
  const auto b = segnet::init_model(5, 2, 3, 7);
  CHECK(checkpoint::serialize(a) == checkpoint::serialize(b));
  CHECK(a.weights.size() == 5 * (25 * 3 + 1));
  for (double w : a.weights) CHECK((w >= -0.01 && w <= 0.01));

  const auto tiny = segnet::init_model(2, 0, 1, 0);
  CHECK(tiny.feature_count() == 2);
  CHECK(tiny.weights.size() == 4);

  CHECK_THROWS_AS(segnet::init_model(1, 2, 3, 0), ConfigError);
  CHECK_THROWS_AS(segnet::init_model(3, 2, 0, 0), ConfigError);
}

TEST_CASE("predict_logits is linear in the weights and rejects channel mismatches") {
  Rng rng(1);
  const Image img = random_image(6, 5, 3, rng);
  auto m = segnet::init_model(4, 1, 3, 3);

  auto zero = m;
  std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
  for (double s : segnet::predict_logits(zero, img).scores) CHECK(s == 0.0);

  auto doubled = m;
  for (double& w : doubled.weights) w *= 2;
  const auto base = segnet::predict_logits(m, img);
  const auto twice = segnet::predict_logits(doubled, img);
  for (std::size_t i = 0; i < base.scores.size(); ++i) CHECK(twice.scores[i] == doctest::Approx(2 * base.scores[i]));

  CHECK(segnet::predict_logits(m, img).scores == base.scores);

  const Image gray(6, 5, 1, 0.5);
  CHECK_THROWS_AS(segnet::predict_logits(m, gray), ShapeError);
}

TEST_CASE("argmax breaks ties toward the lowest class id") {
  const std::vector<double> logits = {2.0, 0.5, 2.0};
  CHECK(segnet::argmax_label(logits) == 0);

  auto m = segnet::init_model(3, 1, 3, 0);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  Rng rng(4);
  const auto lm = segnet::predict_labels(m, random_image(5, 5, 3, rng));
  for (auto l : lm.labels) CHECK(l == 0);
}

TEST_CASE("argmax is invariant to a per-pixel constant added to every class") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(4);
    for (double& l : logits) l = rng.uniform(-3, 3);
    const auto before = segnet::argmax_label(logits);
    const double shift = rng.uniform(-100, 100);
    for (double& l : logits) l += shift;
    CHECK(segnet::argmax_label(logits) == before);
  }
  // Through the model: a constant added to every bias shifts all logits evenly.
  auto m = segnet::init_model(3, 1, 3, 9);
  for (auto& w : m.weights) w = rng.uniform(-1, 1);
  const Image img = random_image(7, 7, 3, rng);
  const auto before = segnet::predict_labels(m, img);
  for (std::size_t c = 0; c < 3; ++c) m.weight(c, m.feature_count() - 1) += 0.75;
  CHECK(segnet::predict_labels(m, img) == before);
}

TEST_CASE("loss of uniform logits on one pixel is ln 2") {
  auto m = segnet::init_model(2, 0, 1, 0);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  const Image img(1, 1, 1, 0.3);
  const LabelMap lm(1, 1, 0);
  const auto lg = segnet::loss_and_grad(m, img, lm);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(lg.supervised_pixels == 1);
}

TEST_CASE("loss vanishes when the true class dominates") {
  auto m = segnet::init_model(2, 0, 1, 0);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  m.weight(0, 1) = 60.0;  // bias of the true class
  const auto lg = segnet::loss_and_grad(m, Image(1, 1, 1, 0.0), LabelMap(1, 1, 0));
  CHECK(lg.loss >= 0.0);
  CHECK(lg.loss < 1e-20);
  m.weight(0, 1) = 800.0;  // overflow-safe thanks to max subtraction
  CHECK(std::isfinite(segnet::loss_and_grad(m, Image(1, 1, 1, 0.0), LabelMap(1, 1, 0)).loss));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto m = segnet::init_model(3, 1, 3, static_cast<std::uint64_t>(trial));
    for (double& w : m.weights) w = rng.uniform(-1.0, 1.0);
    const Image img = random_image(4, 4, 3, rng);
    const LabelMap lm = random_labels(4, 4, 3, rng, trial % 2 ? 0.25 : 0.0);
    if (lm.void_count() == lm.labels.size()) continue;
    const auto lg = segnet::loss_and_grad(m, img, lm);
    CHECK(lg.loss == doctest::Approx(reference_loss(m, img, lm)).epsilon(1e-12));
    worst = std::max(worst, max_relative_error(lg.gradient, finite_difference_gradient(m, img, lm, 1e-6)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("void pixels contribute neither loss nor gradient") {
  Rng rng(77);
  auto m = segnet::init_model(3, 1, 3, 5);
  for (double& w : m.weights) w = rng.uniform(-1, 1);
  const Image img = random_image(6, 6, 3, rng);
  LabelMap lm = random_labels(6, 6, 3, rng, 0.3);
  const auto base = segnet::loss_and_grad(m, img, lm);

  // Void pixels store the sentinel; overwrite everything else to show only
  // non-void labels matter, then compare against a map with those voids
  // replaced by different void encodings of the same sentinel.
  LabelMap same = lm;
  for (std::size_t i = 0; i < same.labels.size(); ++i)
    if (same.labels[i] == kVoid) same.labels[i] = kVoid;
  const auto again = segnet::loss_and_grad(m, img, same);
  CHECK(again.loss == base.loss);
  CHECK(again.gradient == base.gradient);

  // Changing image content only under void pixels whose patches touch no
  // supervised pixel would be needed for image invariance; instead check the
  // label side: the loss equals the mean over the supervised subset.
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < lm.labels.size(); ++i) {
    if (lm.labels[i] == kVoid) continue;
    LabelMap single(6, 6, kVoid);
    single.labels[i] = lm.labels[i];
    sum += segnet::loss_and_grad(m, img, single).loss;
    ++n;
  }
  CHECK(base.loss == doctest::Approx(sum / n).epsilon(1e-12));

  CHECK_THROWS_AS(segnet::loss_and_grad(m, img, LabelMap(6, 6, kVoid)), DegenerateInputError);
}

TEST_CASE("sgd_epoch applies w - lr * grad in stream order") {
  const auto scene = two_class_scene();
  const auto m = segnet::init_model(2, 1, 3, 1);
  const std::vector<segnet::LabeledRef> stream = {{&scene.image, &scene.labels}};

  segnet::SgdConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK(segnet::sgd_epoch(m, stream, cfg).model == m);

  cfg.learning_rate = 0.05;
  const auto stepped = segnet::sgd_epoch(m, stream, cfg).model;
  const auto lg = segnet::loss_and_grad(m, scene.image, scene.labels);
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    CHECK(stepped.weights[i] == m.weights[i] - 0.05 * lg.gradient[i]);
  }

  CHECK_THROWS_AS(segnet::sgd_epoch(m, {}, cfg), ConfigError);
}

TEST_CASE("sgd_epoch skips all-void samples and reports divergence") {
  const auto scene = two_class_scene();
  const LabelMap voids(scene.labels.height, scene.labels.width, kVoid);
  auto m = segnet::init_model(2, 1, 3, 1);
  const std::vector<segnet::LabeledRef> stream = {{&scene.image, &voids}, {&scene.image, &scene.labels}};
  segnet::SgdConfig cfg;
  const auto res = segnet::sgd_epoch(m, stream, cfg);
  CHECK(res.skipped == 1);

  const std::size_t nf = m.feature_count();
  for (std::size_t f = 0; f < nf; ++f) {
    m.weights[f] = 1e308;
    m.weights[nf + f] = -1e308;
  }
  try {
    segnet::sgd_epoch(m, stream, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.sample_index <= stream.size());
  }
}

TEST_CASE("training on a separable two-class scene converges") {
  const auto scene = two_class_scene();
  auto m = segnet::init_model(2, 2, 3, 3);
  const std::vector<segnet::LabeledRef> stream = {{&scene.image, &scene.labels}};
  segnet::SgdConfig cfg;
  const double initial = segnet::loss_and_grad(m, scene.image, scene.labels).loss;
  std::vector<double> curve;
  for (int e = 0; e < 30; ++e) {
    auto res = segnet::sgd_epoch(m, stream, cfg);
    m = std::move(res.model);
    curve.push_back(res.mean_loss);
  }
  const double final_loss = segnet::loss_and_grad(m, scene.image, scene.labels).loss;
  CHECK(final_loss < 0.5 * initial);
  CHECK(curve.back() < curve.front());

  // Keep training for the accuracy check.
  for (int e = 0; e < 300; ++e) m = segnet::sgd_epoch(m, stream, cfg).model;
  const auto pred = segnet::predict_labels(m, scene.image);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) correct += pred.labels[i] == scene.labels.labels[i];
  CHECK(static_cast<double>(correct) / pred.labels.size() >= 0.95);
}

TEST_CASE("clones are bit-identical and isolated") {
  const auto scene = two_class_scene();
  const auto original = segnet::init_model(2, 2, 3, 8);
  const auto bytes = checkpoint::serialize(original);
  auto copy = segnet::clone_model(original);
  CHECK(segnet::predict_labels(copy, scene.image) == segnet::predict_labels(original, scene.image));
  CHECK(checkpoint::serialize(segnet::clone_model(copy)) == bytes);

  const std::vector<segnet::LabeledRef> stream = {{&scene.image, &scene.labels}};
  copy = segnet::sgd_epoch(copy, stream, segnet::SgdConfig{}).model;
  CHECK(copy.weights != original.weights);
  CHECK(checkpoint::serialize(original) == bytes);
}

TEST_CASE("checkpoint bytes follow the TWBR layout and round-trip exactly") {
  Rng rng(5);
  auto m = segnet::init_model(3, 1, 3, 2);
  for (double& w : m.weights) w = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.range(-30, 30));
  const auto bytes = checkpoint::serialize(m);
  REQUIRE(bytes.size() == 18 + m.weights.size() * 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TWBR");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 3);
  CHECK(bytes[10] == 1);
  CHECK(bytes[14] == 3);

  const auto back = checkpoint::deserialize(bytes);
  CHECK(back == m);
  CHECK(checkpoint::serialize(back) == bytes);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(checkpoint::deserialize(bad), IoError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(checkpoint::deserialize(bad), IoError);
}

#include "twibridge/experiment.hpp"

#include <cstdio>
#include <sstream>

#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::experiment {

eval::ConfusionMatrix confusion(const segnet::ModelParams& model, const corridor::Dataset& ds) {
  eval::ConfusionMatrix cm(model.class_count);
  for (const auto& s : ds.samples) {
    if (!s.labels) throw ProtocolError("evaluation sample " + s.id + " has no ground truth");
    s.labels->validate(model.class_count);
    eval::accumulate(cm, *s.labels, segnet::predict_labels(model, s.image));
  }
  return cm;
}

eval::IoUReport evaluate_model(const segnet::ModelParams& model, const corridor::Dataset& ds) {
  return eval::iou_report(confusion(model, ds));
}

double label_agreement(const corridor::Dataset& pseudo, const std::vector<LabelMap>& truth) {
  if (pseudo.size() != truth.size()) throw ShapeError("pseudo-label set and ground truth differ in size");
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& lab = pseudo.samples[i].labels->labels;
    for (std::size_t p = 0; p < lab.size(); ++p) {
      agree += lab[p] == truth[i].labels[p];
      ++total;
    }
  }
  return total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
}

double SeedResult::miou(std::string_view name) const {
  for (const auto& [n, r] : night) {
    if (n == name) return r.mean_iou;
  }
  throw ConfigError("no result row '" + std::string(name) + "'");
}

SeedResult run_seed(const corridor::CorridorConfig& corridor_cfg, const adaptation::AdaptationPlan& plan_cfg,
                    std::uint64_t seed) {
  corridor::CorridorConfig ccfg = corridor_cfg;
  ccfg.master_seed = derive_seed(seed, "corridor");
  adaptation::AdaptationPlan plan = plan_cfg;
  plan.seed = derive_seed(seed, "adaptation");
  const auto cor = corridor::build_corridor(ccfg);

  SeedResult res;
  res.seed = seed;
  plan.mode = adaptation::Mode::ThreeStep;
  res.gradual = adaptation::run_gradual(cor, plan);
  plan.mode = adaptation::Mode::OneStep;
  res.one_step = adaptation::run_one_step(cor, plan, res.gradual.model("phi0"));

  for (const char* name : {"phi0", "phi1", "phi2", "phi3"}) {
    res.night.emplace_back(name, evaluate_model(res.gradual.model(name), cor.night_test));
  }
  res.night.emplace_back("one_step", evaluate_model(res.one_step.model("one_step"), cor.night_test));
  for (std::size_t t = 0; t < 3; ++t) {
    res.pseudo_agreement[t] = label_agreement(res.gradual.pseudo_labeled[t], cor.twilight_truth[t]);
  }
  return res;
}

std::string seeds_csv(const std::vector<SeedResult>& results) {
  std::ostringstream o;
  o << "seed,phi0,phi1,phi2,phi3,one_step\n";
  char buf[32];
  for (const auto& r : results) {
    o << r.seed;
    for (const auto& [name, rep] : r.night) {
      std::snprintf(buf, sizeof buf, ",%.17g", rep.mean_iou);
      o << buf;
    }
    o << '\n';
  }
  return o.str();
}

}  // namespace twibridge::experiment

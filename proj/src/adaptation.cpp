#include "twibridge/adaptation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "twibridge/checkpoint.hpp"
#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::adaptation {
namespace {

constexpr std::array<DomainStage, 3> kTwilight = {DomainStage::Civil, DomainStage::Nautical,
                                                  DomainStage::Astronomical};

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string joined_names(std::span<const Dataset* const> sets) {
  std::string s;
  for (const auto* d : sets) s += (s.empty() ? "" : "+") + d->name;
  return s;
}

std::string joined_hash(std::span<const Dataset* const> sets) {
  std::uint64_t h = fnv1a("");
  for (const auto* d : sets) h = fnv1a(corridor::dataset_hash(*d), h);
  return hex64(h);
}

void require_unlabeled(const Dataset& ds) {
  for (const auto& s : ds.samples) {
    if (s.labels) throw ProtocolError("twilight sample " + s.id + " carries labels; adaptation expects unlabeled data");
  }
}

void require_labeled(const Dataset& ds) {
  for (const auto& s : ds.samples) {
    if (!s.labels) throw ProtocolError("sample " + s.id + " in " + ds.name + " has no labels");
  }
}

std::size_t draws_per_epoch(const AdaptationPlan& plan, const Dataset& day) {
  return plan.stream_length > 0 ? plan.stream_length : 4 * day.size();
}

}  // namespace

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::ThreeStep: return "three-step";
    case Mode::OneStep: return "one-step";
    case Mode::None: return "none";
  }
  return "none";
}

Mode parse_mode(std::string_view name) {
  if (name == "three-step") return Mode::ThreeStep;
  if (name == "one-step") return Mode::OneStep;
  if (name == "none") return Mode::None;
  throw ConfigError("unknown mode '" + std::string(name) + "' (three-step, one-step, none)");
}

void AdaptationPlan::validate() const {
  if (class_count < 2) throw ConfigError("class_count must be >= 2");
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda weights must be finite and >= 0");
  }
  day_sgd.validate();
  adapt_sgd.validate();
  if (confidence_threshold && !(*confidence_threshold >= 0.0 && *confidence_threshold <= 1.0)) {
    throw ConfigError("confidence threshold must lie in [0, 1]");
  }
}

std::string ProvenanceRecord::to_line() const {
  std::ostringstream o;
  o << "stage=" << stage << "\top=" << operation << "\tmodel=" << model << "\tmodel_hash=" << model_hash
    << "\tparent=" << parent << "\tparent_hash=" << parent_hash << "\tdatasets=" << datasets
    << "\tdataset_hash=" << dataset_hash << "\toutput_hash=" << output_hash << "\tseed=" << seed
    << "\tepochs=" << epochs << "\tdraws=" << draws;
  return o.str();
}

ProvenanceRecord ProvenanceRecord::parse(const std::string& line) {
  ProvenanceRecord r;
  std::stringstream ss(line);
  std::string field;
  std::size_t seen = 0;
  while (std::getline(ss, field, '\t')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError(1, "provenance field without '='");
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    ++seen;
    if (key == "stage") r.stage = val;
    else if (key == "op") r.operation = val;
    else if (key == "model") r.model = val;
    else if (key == "model_hash") r.model_hash = val;
    else if (key == "parent") r.parent = val;
    else if (key == "parent_hash") r.parent_hash = val;
    else if (key == "datasets") r.datasets = val;
    else if (key == "dataset_hash") r.dataset_hash = val;
    else if (key == "output_hash") r.output_hash = val;
    else if (key == "seed") r.seed = std::stoull(val);
    else if (key == "epochs") r.epochs = std::stoull(val);
    else if (key == "draws") r.draws = std::stoull(val);
    else --seen;
  }
  if (seen != 12) throw ParseError(1, "incomplete provenance record");
  return r;
}

const ModelParams& StageCheckpointSet::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.name == name) return m.params;
  }
  throw ConfigError("no model named '" + std::string(name) + "'");
}

double mean_loss(const ModelParams& model, const Dataset& ds) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : ds.samples) {
    if (!s.labels) continue;
    try {
      sum += segnet::loss_and_grad(model, s.image, *s.labels).loss;
      ++n;
    } catch (const DegenerateInputError&) {
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

TrainResult train_daytime(const Dataset& day, const segnet::SgdConfig& sgd, std::uint64_t seed,
                          std::size_t class_count, std::size_t patch_radius) {
  sgd.validate();
  if (day.samples.empty()) throw ConfigError("daytime dataset is empty");
  require_labeled(day);
  TrainResult res;
  res.model = segnet::init_model(class_count, patch_radius, day.samples.front().image.channels,
                                 derive_seed(seed, "init"));
  res.initial_loss = mean_loss(res.model, day);

  std::vector<std::size_t> order(day.size());
  std::vector<segnet::LabeledRef> stream(day.size());
  for (std::size_t e = 0; e < sgd.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(mix64(seed) ^ sgd.shuffle_seed, "day_shuffle", e));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& s = day.samples[order[i]];
      stream[i] = {&s.image, &*s.labels};
    }
    auto ep = segnet::sgd_epoch(res.model, stream, sgd);
    res.model = std::move(ep.model);
    res.epoch_losses.push_back(ep.mean_loss);
  }
  return res;
}

Dataset pseudo_label(const ModelParams& model, const Dataset& ds, std::optional<double> confidence_threshold) {
  Dataset out;
  out.name = ds.name;
  out.stage = ds.stage;
  out.samples.reserve(ds.size());
  std::vector<double> probs(model.class_count);
  for (const auto& s : ds.samples) {
    corridor::Sample ps;
    ps.image = s.image;
    ps.stage = s.stage;
    ps.id = s.id;
    const auto logits = segnet::predict_logits(model, s.image);
    LabelMap lm(s.image.height, s.image.width);
    for (std::size_t p = 0; p < s.image.pixel_count(); ++p) {
      const auto px = logits.pixel(p);
      lm.labels[p] = segnet::argmax_label(px);
      if (confidence_threshold) {
        segnet::softmax(px, probs);
        if (probs[lm.labels[p]] < *confidence_threshold) lm.labels[p] = kVoid;
      }
    }
    ps.labels = std::move(lm);
    out.samples.push_back(std::move(ps));
  }
  return out;
}

std::vector<StreamDraw> mixed_stream(std::span<const Dataset* const> datasets, std::span<const double> weights,
                                     std::size_t length, std::uint64_t seed) {
  if (datasets.size() != weights.size()) throw ConfigError("one weight per dataset is required");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) throw ConfigError("stream weights must be >= 0");
    if (!datasets[k]->samples.empty()) total += weights[k];
    cumulative[k] = total;
  }
  if (!(total > 0.0)) throw ConfigError("stream weights sum to zero");

  Rng rng(seed);
  std::vector<StreamDraw> draws(length);
  for (auto& d : draws) {
    const double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && (u >= cumulative[k] || datasets[k]->samples.empty() || weights[k] == 0.0)) ++k;
    d.dataset = k;
    d.sample = rng.below(datasets[k]->samples.size());
  }
  return draws;
}

std::vector<segnet::LabeledRef> resolve_stream(std::span<const Dataset* const> datasets,
                                               std::span<const StreamDraw> draws) {
  std::vector<segnet::LabeledRef> out;
  out.reserve(draws.size());
  for (const auto& d : draws) {
    const auto& s = datasets[d.dataset]->samples[d.sample];
    if (!s.labels) throw ProtocolError("stream sample " + s.id + " has no labels");
    out.push_back({&s.image, &*s.labels});
  }
  return out;
}

AdaptResult adapt_step(const ModelParams& prev_model, std::span<const Dataset* const> labeled_sets,
                       std::span<const double> weights, const AdaptationPlan& plan, std::uint64_t seed) {
  if (labeled_sets.empty()) throw ConfigError("adapt_step needs the daytime set");
  for (const auto* d : labeled_sets) require_labeled(*d);
  AdaptResult res{segnet::clone_model(prev_model), {}, 0};
  const std::size_t length = draws_per_epoch(plan, *labeled_sets.front());
  if (plan.adapt_sgd.epochs > 0 && length == 0) throw ConfigError("fine-tuning stream is empty");
  for (std::size_t e = 0; e < plan.adapt_sgd.epochs; ++e) {
    const auto draws = mixed_stream(labeled_sets, weights, length, derive_seed(seed, "stream", e));
    const auto refs = resolve_stream(labeled_sets, draws);
    auto ep = segnet::sgd_epoch(res.model, refs, plan.adapt_sgd);
    res.model = std::move(ep.model);
    res.epoch_losses.push_back(ep.mean_loss);
    res.draws += draws.size();
  }
  return res;
}

namespace {

struct Phi0 {
  ModelParams model;
  std::vector<double> losses;
};

Phi0 bootstrap(const corridor::Corridor& cor, const AdaptationPlan& plan, const std::optional<ModelParams>& given,
               StageCheckpointSet& out) {
  plan.validate();
  require_labeled(cor.day);
  for (DomainStage s : kTwilight) require_unlabeled(cor.split(s));
  Phi0 p;
  const std::uint64_t seed = derive_seed(plan.seed, "train_daytime");
  if (given) {
    p.model = *given;
  } else {
    auto tr = train_daytime(cor.day, plan.day_sgd, seed, plan.class_count, plan.patch_radius);
    p.model = std::move(tr.model);
    p.losses = std::move(tr.epoch_losses);
  }
  ProvenanceRecord r;
  r.stage = "day";
  r.operation = given ? "load_daytime" : "train_daytime";
  r.model = "phi0";
  r.model_hash = checkpoint::hash(p.model);
  r.datasets = cor.day.name;
  r.dataset_hash = corridor::dataset_hash(cor.day);
  r.seed = seed;
  r.epochs = given ? 0 : plan.day_sgd.epochs;
  r.draws = given ? 0 : plan.day_sgd.epochs * cor.day.size();
  out.provenance.push_back(r);
  out.models.push_back({"phi0", p.model});
  out.day_epoch_losses = p.losses;
  return p;
}

ProvenanceRecord pseudo_record(const std::string& stage, const std::string& model_name, const ModelParams& model,
                               const Dataset& input, const Dataset& output) {
  ProvenanceRecord r;
  r.stage = stage;
  r.operation = "pseudo_label";
  r.model = model_name;
  r.model_hash = checkpoint::hash(model);
  r.datasets = input.name;
  r.dataset_hash = corridor::dataset_hash(input);
  r.output_hash = corridor::dataset_hash(output);
  return r;
}

ProvenanceRecord adapt_record(const std::string& stage, const std::string& name, const AdaptResult& res,
                              const std::string& parent, const ModelParams& parent_model,
                              std::span<const Dataset* const> sets, std::uint64_t seed, std::size_t epochs) {
  ProvenanceRecord r;
  r.stage = stage;
  r.operation = "adapt_step";
  r.model = name;
  r.model_hash = checkpoint::hash(res.model);
  r.parent = parent;
  r.parent_hash = checkpoint::hash(parent_model);
  r.datasets = joined_names(sets);
  r.dataset_hash = joined_hash(sets);
  r.seed = seed;
  r.epochs = epochs;
  r.draws = res.draws;
  return r;
}

void budget_record(StageCheckpointSet& out) {
  ProvenanceRecord r;
  r.stage = "all";
  r.operation = "budget";
  r.model = out.models.back().name;
  r.model_hash = checkpoint::hash(out.models.back().params);
  r.datasets = "-";
  r.dataset_hash = "-";
  for (const auto& p : out.provenance) {
    if (p.operation == "adapt_step") {
      r.epochs += p.epochs;
      r.draws += p.draws;
    }
  }
  out.provenance.push_back(r);
}

}  // namespace

StageCheckpointSet run_gradual(const corridor::Corridor& cor, const AdaptationPlan& plan,
                               const std::optional<ModelParams>& phi0) {
  StageCheckpointSet out;
  ModelParams current = bootstrap(cor, plan, phi0, out).model;
  std::vector<const Dataset*> sets = {&cor.day};
  std::vector<double> weights = {1.0};
  out.pseudo_labeled.reserve(kTwilight.size());

  for (std::size_t t = 0; t < kTwilight.size(); ++t) {
    const Dataset& raw = cor.split(kTwilight[t]);
    const std::string parent = "phi" + std::to_string(t);
    const std::string child = "phi" + std::to_string(t + 1);

    // Labels of earlier stages stay as first produced.
    out.pseudo_labeled.push_back(pseudo_label(current, raw, plan.confidence_threshold));
    const Dataset& labeled = out.pseudo_labeled.back();
    out.provenance.push_back(pseudo_record(raw.name, parent, current, raw, labeled));

    sets.push_back(&labeled);
    weights.push_back(plan.lambdas[t]);
    const std::uint64_t seed = derive_seed(plan.seed, "adapt_step", t + 1);
    auto res = adapt_step(current, sets, weights, plan, seed);
    out.provenance.push_back(adapt_record(raw.name, child, res, parent, current, sets, seed, plan.adapt_sgd.epochs));
    current = std::move(res.model);
    out.models.push_back({child, current});
  }
  budget_record(out);
  return out;
}

StageCheckpointSet run_one_step(const corridor::Corridor& cor, const AdaptationPlan& plan,
                                const std::optional<ModelParams>& phi0) {
  StageCheckpointSet out;
  const ModelParams base = bootstrap(cor, plan, phi0, out).model;

  Dataset all_twilight;
  all_twilight.name = "civil+nautical+astronomical";
  all_twilight.stage = DomainStage::Civil;
  for (DomainStage s : kTwilight)
    for (const auto& smp : cor.split(s).samples) all_twilight.samples.push_back(smp);
  const Dataset labeled_all = pseudo_label(base, all_twilight, plan.confidence_threshold);
  out.provenance.push_back(pseudo_record(all_twilight.name, "phi0", base, all_twilight, labeled_all));

  // Split back per stage so each twilight set keeps its own lambda.
  std::size_t offset = 0;
  for (DomainStage s : kTwilight) {
    const Dataset& raw = cor.split(s);
    Dataset part;
    part.name = raw.name;
    part.stage = s;
    part.samples.assign(labeled_all.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                        labeled_all.samples.begin() + static_cast<std::ptrdiff_t>(offset + raw.size()));
    offset += raw.size();
    out.pseudo_labeled.push_back(std::move(part));
  }

  std::vector<const Dataset*> sets = {&cor.day};
  std::vector<double> weights = {1.0};
  for (std::size_t t = 0; t < kTwilight.size(); ++t) {
    sets.push_back(&out.pseudo_labeled[t]);
    weights.push_back(plan.lambdas[t]);
  }
  const std::uint64_t seed = derive_seed(plan.seed, "one_step");
  auto res = adapt_step(base, sets, weights, plan, seed);
  out.provenance.push_back(
      adapt_record(all_twilight.name, "one_step", res, "phi0", base, sets, seed, plan.adapt_sgd.epochs));
  out.models.push_back({"one_step", std::move(res.model)});
  budget_record(out);
  return out;
}

StageCheckpointSet run_adaptation(const corridor::Corridor& cor, const AdaptationPlan& plan,
                                  const std::optional<ModelParams>& phi0) {
  switch (plan.mode) {
    case Mode::ThreeStep: return run_gradual(cor, plan, phi0);
    case Mode::OneStep: return run_one_step(cor, plan, phi0);
    case Mode::None: {
      StageCheckpointSet out;
      bootstrap(cor, plan, phi0, out);
      return out;
    }
  }
  throw ConfigError("unknown adaptation mode");
}

}  // namespace twibridge::adaptation

#include "twibridge/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::config {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json stage_to_json(const corridor::StageDegradation& s) {
  return {{"brightness", s.brightness}, {"gamma", s.gamma}, {"noise_sigma", s.noise_sigma}, {"glare_max", s.glare_max}};
}

void stage_from_json(const json& j, corridor::StageDegradation& s, const std::string& where) {
  check_keys(j, where, {"brightness", "gamma", "noise_sigma", "glare_max"});
  read(j, "brightness", s.brightness, where);
  read(j, "gamma", s.gamma, where);
  read(j, "noise_sigma", s.noise_sigma, where);
  read(j, "glare_max", s.glare_max, where);
}

json corridor_to_json(const corridor::CorridorConfig& c) {
  json stages = json::object();
  for (DomainStage s : kAllStages) stages[std::string(stage_name(s))] = stage_to_json(c.stages[stage_index(s)]);
  json counts = json::object();
  for (DomainStage s : kAllStages) counts[std::string(stage_name(s))] = c.counts[stage_index(s)];
  json j = {
      {"class_count", c.class_count},
      {"height", c.height},
      {"width", c.width},
      {"counts", counts},
      {"stages", stages},
      {"glare_amplitude", {c.glare_amplitude_min, c.glare_amplitude_max}},
      {"glare_sigma", {c.glare_sigma_min, c.glare_sigma_max}},
      {"color_jitter", c.color_jitter},
      {"exposure_min", c.exposure_min},
  };
  j["scene_base"] = c.scene_base ? json(*c.scene_base) : json(nullptr);
  return j;
}

void corridor_from_json(const json& j, corridor::CorridorConfig& c) {
  const std::string w = "corridor";
  check_keys(j, w, {"class_count", "height", "width", "counts", "stages", "glare_amplitude", "glare_sigma",
                    "color_jitter", "exposure_min", "scene_base"});
  read(j, "class_count", c.class_count, w);
  read(j, "height", c.height, w);
  read(j, "width", c.width, w);
  if (j.contains("counts")) {
    const auto& cj = j["counts"];
    check_keys(cj, w + ".counts", {"day", "civil", "nautical", "astronomical", "night"});
    for (DomainStage s : kAllStages) read(cj, std::string(stage_name(s)).c_str(), c.counts[stage_index(s)], w + ".counts");
  }
  if (j.contains("stages")) {
    const auto& sj = j["stages"];
    check_keys(sj, w + ".stages", {"day", "civil", "nautical", "astronomical", "night"});
    for (DomainStage s : kAllStages) {
      const std::string name(stage_name(s));
      if (sj.contains(name)) stage_from_json(sj[name], c.stages[stage_index(s)], w + ".stages." + name);
    }
  }
  std::array<double, 2> pair{};
  pair = {c.glare_amplitude_min, c.glare_amplitude_max};
  read(j, "glare_amplitude", pair, w);
  c.glare_amplitude_min = pair[0];
  c.glare_amplitude_max = pair[1];
  pair = {c.glare_sigma_min, c.glare_sigma_max};
  read(j, "glare_sigma", pair, w);
  c.glare_sigma_min = pair[0];
  c.glare_sigma_max = pair[1];
  read(j, "color_jitter", c.color_jitter, w);
  read(j, "exposure_min", c.exposure_min, w);
  if (j.contains("scene_base")) {
    if (j["scene_base"].is_null()) {
      c.scene_base.reset();
    } else {
      std::array<std::uint64_t, kStageCount> base{};
      read(j, "scene_base", base, w);
      c.scene_base = base;
    }
  }
}

}  // namespace

std::uint64_t corridor_seed(std::uint64_t master) { return derive_seed(master, "corridor"); }
std::uint64_t adaptation_seed(std::uint64_t master) { return derive_seed(master, "adaptation"); }

void RunConfig::validate() const {
  resolved_corridor().validate();
  const auto p = resolved_plan();
  p.validate();
  if (p.class_count != corridor.class_count) throw ConfigError("plan and corridor class counts differ");
  thresholds.validate();
  if (report_seeds.empty()) throw ConfigError("report_seeds must not be empty");
}

corridor::CorridorConfig RunConfig::resolved_corridor() const {
  auto c = corridor;
  c.master_seed = corridor_seed(seed);
  return c;
}

adaptation::AdaptationPlan RunConfig::resolved_plan() const {
  auto p = plan;
  p.class_count = corridor.class_count;
  p.seed = adaptation_seed(seed);
  const double lr = training.learning_rate();
  p.day_sgd = {lr, training.batch_size, training.day_epochs, training.shuffle_seed};
  p.adapt_sgd = {lr, training.batch_size, training.adapt_epochs, training.shuffle_seed};
  return p;
}

std::string to_json_text(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["corridor"] = corridor_to_json(cfg.corridor);
  j["training"] = {
      {"base_learning_rate", cfg.training.base_learning_rate},
      {"lr_multiplier", cfg.training.lr_multiplier},
      {"batch_size", cfg.training.batch_size},
      {"day_epochs", cfg.training.day_epochs},
      {"adapt_epochs", cfg.training.adapt_epochs},
      {"shuffle_seed", cfg.training.shuffle_seed},
  };
  j["adaptation"] = {
      {"mode", std::string(adaptation::mode_name(cfg.plan.mode))},
      {"lambdas", cfg.plan.lambdas},
      {"patch_radius", cfg.plan.patch_radius},
      {"stream_length", cfg.plan.stream_length},
  };
  j["adaptation"]["confidence_threshold"] =
      cfg.plan.confidence_threshold ? json(*cfg.plan.confidence_threshold) : json(nullptr);
  j["thresholds"] = {
      {"day_min", cfg.thresholds.day_min},
      {"civil_min", cfg.thresholds.civil_min},
      {"nautical_min", cfg.thresholds.nautical_min},
      {"astro_min", cfg.thresholds.astro_min},
  };
  j["report_seeds"] = cfg.report_seeds;
  return j.dump(2) + "\n";
}

RunConfig from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  check_keys(j, "config", {"seed", "corridor", "training", "adaptation", "thresholds", "report_seeds"});
  read(j, "seed", cfg.seed, "config");
  if (j.contains("corridor")) corridor_from_json(j["corridor"], cfg.corridor);
  if (j.contains("training")) {
    const auto& t = j["training"];
    const std::string w = "training";
    check_keys(t, w, {"base_learning_rate", "lr_multiplier", "batch_size", "day_epochs", "adapt_epochs", "shuffle_seed"});
    read(t, "base_learning_rate", cfg.training.base_learning_rate, w);
    read(t, "lr_multiplier", cfg.training.lr_multiplier, w);
    read(t, "batch_size", cfg.training.batch_size, w);
    read(t, "day_epochs", cfg.training.day_epochs, w);
    read(t, "adapt_epochs", cfg.training.adapt_epochs, w);
    read(t, "shuffle_seed", cfg.training.shuffle_seed, w);
  }
  if (j.contains("adaptation")) {
    const auto& a = j["adaptation"];
    const std::string w = "adaptation";
    check_keys(a, w, {"mode", "lambdas", "patch_radius", "stream_length", "confidence_threshold"});
    std::string mode(adaptation::mode_name(cfg.plan.mode));
    read(a, "mode", mode, w);
    cfg.plan.mode = adaptation::parse_mode(mode);
    read(a, "lambdas", cfg.plan.lambdas, w);
    read(a, "patch_radius", cfg.plan.patch_radius, w);
    read(a, "stream_length", cfg.plan.stream_length, w);
    if (a.contains("confidence_threshold")) {
      if (a["confidence_threshold"].is_null()) {
        cfg.plan.confidence_threshold.reset();
      } else {
        double t = 0.0;
        read(a, "confidence_threshold", t, w);
        cfg.plan.confidence_threshold = t;
      }
    }
  }
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    const std::string w = "thresholds";
    check_keys(t, w, {"day_min", "civil_min", "nautical_min", "astro_min"});
    read(t, "day_min", cfg.thresholds.day_min, w);
    read(t, "civil_min", cfg.thresholds.civil_min, w);
    read(t, "nautical_min", cfg.thresholds.nautical_min, w);
    read(t, "astro_min", cfg.thresholds.astro_min, w);
  }
  read(j, "report_seeds", cfg.report_seeds, "config");
  cfg.validate();
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void save(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config " + path.string());
  out << to_json_text(cfg);
  if (!out) throw IoError("failed writing config " + path.string());
}

}  // namespace twibridge::config

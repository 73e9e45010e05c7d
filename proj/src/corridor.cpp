#include "twibridge/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "twibridge/errors.hpp"
#include "twibridge/pnm.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::corridor {
namespace {


constexpr std::array<std::array<std::uint8_t, 3>, 19> kPalette = {{
    {128, 64, 128}, {70, 130, 180}, {220, 20, 60},  {107, 142, 35}, {220, 220, 0},
    {0, 0, 142},    {70, 70, 70},   {244, 35, 232}, {102, 102, 156}, {190, 153, 153},
    {153, 153, 153}, {250, 170, 30}, {152, 251, 152}, {255, 0, 0},  {0, 0, 70},
    {0, 60, 100},   {0, 80, 100},   {0, 0, 230},    {119, 11, 32},
}};

void fill_rect(Scene& s, std::size_t cls, long y0, long x0, long y1, long x1) {
  for (long y = std::max(0L, y0); y < std::min<long>(static_cast<long>(s.labels.height), y1); ++y)
    for (long x = std::max(0L, x0); x < std::min<long>(static_cast<long>(s.labels.width), x1); ++x)
      s.labels.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<std::uint8_t>(cls);
}

void fill_disc(Scene& s, std::size_t cls, double cy, double cx, double radius) {
  for (std::size_t y = 0; y < s.labels.height; ++y)
    for (std::size_t x = 0; x < s.labels.width; ++x) {
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double dx = static_cast<double>(x) + 0.5 - cx;
      if (dy * dy + dx * dx <= radius * radius) s.labels.at(y, x) = static_cast<std::uint8_t>(cls);
    }
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::array<std::uint64_t, kStageCount> CorridorConfig::resolved_scene_base() const {
  if (scene_base) return *scene_base;
  std::array<std::uint64_t, kStageCount> base{};
  std::uint64_t next = 0;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    base[s] = next;
    next += counts[s];
  }
  return base;
}

void CorridorConfig::validate() const {
  if (class_count < 2 || class_count >= kVoid) throw ConfigError("class_count must be in [2, 254]");
  if (height < 8 || width < 8) throw ConfigError("scene height and width must be >= 8");
  for (std::size_t s = 0; s < kStageCount; ++s) {
    if (counts[s] < 1) throw ConfigError("every split count must be >= 1");
    const auto& d = stages[s];
    if (!(d.brightness > 0.0 && d.brightness <= 1.0)) throw ConfigError("brightness must lie in (0, 1]");
    if (!(d.gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
    if (!(d.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
    if (s > 0 && !(d.brightness < stages[s - 1].brightness)) {
      throw ConfigError("brightness must strictly decrease from day to night");
    }
    if (s > 0 && d.noise_sigma < stages[s - 1].noise_sigma) {
      throw ConfigError("noise sigma must not decrease from day to night");
    }
  }
  if (glare_amplitude_min < 0 || glare_amplitude_max < glare_amplitude_min || glare_sigma_min <= 0 ||
      glare_sigma_max < glare_sigma_min) {
    throw ConfigError("invalid glare parameters");
  }
  if (color_jitter < 0) throw ConfigError("color_jitter must be >= 0");
  if (!(exposure_min > 0.0 && exposure_min <= 1.0)) throw ConfigError("exposure_min must lie in (0, 1]");
  const auto base = resolved_scene_base();
  for (std::size_t a = 0; a < kStageCount; ++a)
    for (std::size_t b = a + 1; b < kStageCount; ++b) {
      const bool disjoint = base[a] + counts[a] <= base[b] || base[b] + counts[b] <= base[a];
      if (!disjoint) {
        throw ConfigError("scene seed ranges of " + std::string(stage_name(kAllStages[a])) + " and " +
                          std::string(stage_name(kAllStages[b])) + " overlap");
      }
    }
}

bool Dataset::fully_labeled() const {
  return std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.labels.has_value(); });
}

const Dataset& Corridor::split(DomainStage s) const {
  switch (s) {
    case DomainStage::Day: return day;
    case DomainStage::Civil: return civil;
    case DomainStage::Nautical: return nautical;
    case DomainStage::Astronomical: return astronomical;
    case DomainStage::Night: return night_test;
  }
  return day;
}

std::array<double, 3> class_color(std::size_t c) {
  // Equal channel sum, hue spread evenly for the first five classes and by
  // the golden angle after that.
  constexpr std::array<double, 5> kHueDeg = {30.0, 246.0, 102.0, 174.0, 318.0};
  const double hue_deg = c < kHueDeg.size() ? kHueDeg[c] : std::fmod(30.0 + 137.507764 * static_cast<double>(c), 360.0);
  const double hue = hue_deg * std::numbers::pi / 180.0;
  std::array<double, 3> rgb{};
  for (std::size_t k = 0; k < 3; ++k) {
    rgb[k] = 0.5 + 0.5 * std::cos(hue - 2.0 * std::numbers::pi * static_cast<double>(k) / 3.0);
  }
  return rgb;
}

std::array<std::uint8_t, 3> palette_color(std::size_t c) {
  if (c == kVoid) return {0, 0, 0};
  if (c < kPalette.size()) return kPalette[c];
  const std::uint64_t h = mix64(c);
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

std::uint64_t scene_seed(std::uint64_t master_seed, std::uint64_t scene_index) {
  return derive_seed(master_seed, "scene", scene_index);
}

Scene generate_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::size_t class_count,
                     double jitter, double exposure_min) {
  if (height < 8 || width < 8) throw ConfigError("scene height and width must be >= 8");
  if (class_count < 2 || class_count >= kVoid) throw ConfigError("class_count must be in [2, 254]");
  Rng rng(seed);
  Scene s{Image(height, width, 3), LabelMap(height, width, 1)};
  const auto h = static_cast<double>(height);
  const auto w = static_cast<double>(width);

  // Sky (class 1) on top, ground (class 0) at the bottom. For C > 2 the
  // band between them is a full-width backdrop of an object class, and
  // up to three more rectangles or discs are placed anywhere.
  const double sky = rng.uniform(0.1, 0.3) * h;
  const double ground = rng.uniform(0.7, 0.9) * h;
  const double tilt = rng.uniform(-0.1, 0.1);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = tilt * (static_cast<double>(x) - w / 2);
      const double yy = static_cast<double>(y);
      s.labels.at(y, x) = yy < sky + dx ? 1 : 0;
    }

  if (class_count > 2) {
    const auto extra = rng.range(0, 3);
    fill_rect(s, 2 + rng.below(class_count - 2), std::lround(sky + rng.uniform(1.0, 3.0)), 0, std::lround(ground),
              static_cast<long>(width));
    for (std::int64_t k = 0; k < extra; ++k) {
      const std::size_t cls = 2 + rng.below(class_count - 2);
      if (rng.uniform() < 0.5) {
        const double rh = rng.uniform(0.2, 0.45) * h;
        const double rw = rng.uniform(0.2, 0.45) * w;
        const double y0 = rng.uniform(0, h - rh);
        const double x0 = rng.uniform(0, w - rw);
        fill_rect(s, cls, std::lround(y0), std::lround(x0), std::lround(y0 + rh), std::lround(x0 + rw));
      } else {
        const double r = rng.uniform(0.12, 0.25) * std::min(h, w);
        fill_disc(s, cls, rng.uniform(r, h - r), rng.uniform(r, w - r), r);
      }
    }
  }

  const double exposure = rng.uniform(exposure_min, 1.0);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const auto base = class_color(s.labels.at(y, x));
      for (std::size_t c = 0; c < 3; ++c)
        s.image.at(y, x, c) = std::clamp(exposure * base[c] + rng.uniform(-jitter, jitter), 0.0, 1.0);
    }
  quantize_8bit(s.image);
  return s;
}

Image degrade(const Image& image, DomainStage stage, const CorridorConfig& config, std::uint64_t seed) {
  const StageDegradation& d = config.stages[stage_index(stage)];
  Image out = image;
  for (double& v : out.data) v = std::pow(d.brightness * v, d.gamma);

  Rng rng(seed);
  if (d.glare_max > 0) {
    const auto blobs = rng.range(0, d.glare_max);
    constexpr std::array<double, 3> tint = {1.0, 0.85, 0.6};
    for (std::int64_t b = 0; b < blobs; ++b) {
      const double cy = rng.uniform(0, static_cast<double>(image.height));
      const double cx = rng.uniform(0, static_cast<double>(image.width));
      const double sigma = rng.uniform(config.glare_sigma_min, config.glare_sigma_max);
      const double amp = rng.uniform(config.glare_amplitude_min, config.glare_amplitude_max);
      for (std::size_t y = 0; y < image.height; ++y)
        for (std::size_t x = 0; x < image.width; ++x) {
          const double dy = static_cast<double>(y) - cy;
          const double dx = static_cast<double>(x) - cx;
          const double g = amp * std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
          for (std::size_t c = 0; c < image.channels; ++c) out.at(y, x, c) += g * tint[c % 3];
        }
    }
  }
  if (d.noise_sigma > 0) {
    for (double& v : out.data) v += d.noise_sigma * rng.gaussian();
  }
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Corridor build_corridor(const CorridorConfig& config) {
  config.validate();
  const auto base = config.resolved_scene_base();
  Corridor cor;
  std::array<Dataset*, kStageCount> splits = {&cor.day, &cor.civil, &cor.nautical, &cor.astronomical,
                                              &cor.night_test};
  for (DomainStage stage : kAllStages) {
    const std::size_t si = stage_index(stage);
    Dataset& ds = *splits[si];
    ds.name = std::string(stage_name(stage));
    ds.stage = stage;
    ds.samples.reserve(config.counts[si]);
    for (std::size_t i = 0; i < config.counts[si]; ++i) {
      const std::uint64_t index = base[si] + i;
      const std::uint64_t seed = scene_seed(config.master_seed, index);
      Scene scene = generate_scene(seed, config.height, config.width, config.class_count, config.color_jitter,
                                   config.exposure_min);
      Sample sample;
      sample.stage = stage;
      char id[48];
      std::snprintf(id, sizeof id, "%s_%06llu", ds.name.c_str(), static_cast<unsigned long long>(index));
      sample.id = id;
      sample.image = degrade(scene.image, stage, config, derive_seed(seed, "degrade", si));
      quantize_8bit(sample.image);
      if (stage == DomainStage::Day || stage == DomainStage::Night) {
        sample.labels = std::move(scene.labels);
      } else {
        cor.twilight_truth[si - 1].push_back(std::move(scene.labels));
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  return cor;
}

std::string dataset_hash(const Dataset& ds) {
  std::uint64_t h = fnv1a(ds.name);
  for (const auto& s : ds.samples) {
    h = fnv1a(s.id, h);
    for (double v : s.image.data) {
      const char q = static_cast<char>(std::lround(v * 255.0));
      h = fnv1a(std::string_view(&q, 1), h);
    }
    if (s.labels) {
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(s.labels->labels.data()), s.labels->labels.size()), h);
    }
  }
  return hex64(h);
}

std::filesystem::path manifest_path(const std::filesystem::path& root, DomainStage stage) {
  return root / "manifests" / (std::string(stage_name(stage)) + ".tsv");
}

void write_manifest(const Dataset& ds, const std::filesystem::path& root, bool with_labels) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "manifests");
  fs::create_directories(root / "images");
  const fs::path mpath = root / "manifests" / (ds.name + ".tsv");
  std::ofstream out(mpath, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + mpath.string());
  for (const auto& s : ds.samples) {
    const std::string img = "images/" + s.id + ".ppm";
    pnm::write_ppm(root / img, s.image);
    out << s.id << '\t' << stage_name(s.stage) << '\t' << img;
    if (with_labels && s.labels) {
      const std::string lab = "images/" + s.id + ".pgm";
      pnm::write_pgm(root / lab, *s.labels);
      out << '\t' << lab;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + mpath.string());
}

void write_corridor(const Corridor& corridor, const std::filesystem::path& root) {
  for (DomainStage s : kAllStages) {
    const bool labeled = s == DomainStage::Day || s == DomainStage::Night;
    write_manifest(corridor.split(s), root, labeled);
  }
}

Dataset read_manifest(const std::filesystem::path& manifest, const std::filesystem::path& root) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  Dataset ds;
  ds.name = manifest.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() < 3 || fields.size() > 4) throw ParseError(lineno, "expected 3 or 4 tab-separated fields");
    Sample s;
    s.id = fields[0];
    try {
      s.stage = parse_stage(fields[1]);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    s.image = pnm::read_ppm(root / fields[2]);
    if (fields.size() == 4) s.labels = pnm::read_pgm(root / fields[3]);
    if (ds.samples.empty()) ds.stage = s.stage;
    else if (s.stage != ds.stage) throw ParseError(lineno, "mixed stages in one manifest");
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Image render_labels(const LabelMap& labels) {
  Image img(labels.height, labels.width, 3);
  for (std::size_t p = 0; p < labels.labels.size(); ++p) {
    const auto col = palette_color(labels.labels[p]);
    for (std::size_t c = 0; c < 3; ++c) img.data[p * 3 + c] = col[c] / 255.0;
  }
  return img;
}

}  // namespace twibridge::corridor

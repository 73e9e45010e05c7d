#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "twibridge/stage.hpp"

namespace twibridge::solar {

struct SolarObservation {
  std::chrono::sys_seconds timestamp;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  // Throws ConfigError when latitude or longitude is out of range.
  void validate() const;
};

// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional "Z" or "+00:00" suffix.
std::chrono::sys_seconds parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::chrono::sys_seconds t);

// Geometric elevation of the sun's center in degrees, no refraction.
// Fractional-year series for declination and equation of time.
double solar_elevation(const SolarObservation& obs);

struct StageThresholds {
  double day_min = 0.0;
  double civil_min = -6.0;
  double nautical_min = -12.0;
  double astro_min = -18.0;

  void validate() const;
};

// Each boundary belongs to the darker stage: e == -6 is Nautical.
DomainStage classify_stage(double elevation_deg, const StageThresholds& thresholds = {});

struct Frame {
  std::string id;
  SolarObservation obs;
};

struct ClassifiedFrame {
  Frame frame;
  double elevation_deg = 0.0;
};

struct Partition {
  std::array<std::vector<ClassifiedFrame>, kStageCount> stages;
  std::array<std::size_t, kStageCount> counts{};
  std::size_t total() const;
};

Partition partition_manifest(const std::vector<Frame>& frames, const StageThresholds& thresholds = {});

// CSV "id,iso8601_utc,lat_deg,lon_deg"; an optional header line starting with
// "id," is skipped. Throws ParseError carrying the 1-based line number.
std::vector<Frame> parse_frames_csv(std::istream& in);

// Writes <dir>/<stage>.csv per stage (same columns plus elevation_deg) and
// <counts_path> with "stage,count" rows.
void write_partition(const Partition& partition, const std::filesystem::path& dir,
                     const std::filesystem::path& counts_path);

}  // namespace twibridge::solar

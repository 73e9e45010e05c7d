#include "twibridge/solar.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "twibridge/errors.hpp"

namespace twibridge::solar {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

void SolarObservation::validate() const {
  if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0)) throw ConfigError("latitude out of [-90, 90]");
  if (!(longitude_deg >= -180.0 && longitude_deg <= 180.0)) throw ConfigError("longitude out of [-180, 180]");
}

std::chrono::sys_seconds parse_iso8601_utc(std::string_view text) {
  using namespace std::chrono;
  std::string_view t = text;
  if (t.ends_with('Z')) t.remove_suffix(1);
  else if (t.ends_with("+00:00")) t.remove_suffix(6);
  int y, mo, d, h, mi, s;
  if (t.size() != 19 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') || t[13] != ':' ||
      t[16] != ':' || !parse_int(t.substr(0, 4), y) || !parse_int(t.substr(5, 2), mo) ||
      !parse_int(t.substr(8, 2), d) || !parse_int(t.substr(11, 2), h) || !parse_int(t.substr(14, 2), mi) ||
      !parse_int(t.substr(17, 2), s)) {
    throw ConfigError("malformed ISO-8601 UTC timestamp '" + std::string(text) + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw ConfigError("invalid date/time '" + std::string(text) + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601_utc(std::chrono::sys_seconds t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

double solar_elevation(const SolarObservation& obs) {
  using namespace std::chrono;
  obs.validate();
  const auto day_start = floor<days>(obs.timestamp);
  const year_month_day ymd{day_start};
  const sys_days jan1{ymd.year() / January / 1};
  const double day_of_year = static_cast<double>((day_start - jan1).count()) + 1.0;
  const double year_days = ymd.year().is_leap() ? 366.0 : 365.0;
  const double hour = duration<double, std::ratio<3600>>(obs.timestamp - day_start).count();

  const double g = 2.0 * std::numbers::pi / year_days * (day_of_year - 1.0 + (hour - 12.0) / 24.0);
  const double eqtime_min = 229.18 * (0.000075 + 0.001868 * std::cos(g) - 0.032077 * std::sin(g) -
                                      0.014615 * std::cos(2 * g) - 0.040849 * std::sin(2 * g));
  const double decl = 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) - 0.006758 * std::cos(2 * g) +
                      0.000907 * std::sin(2 * g) - 0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);

  const double true_solar_min = hour * 60.0 + eqtime_min + 4.0 * obs.longitude_deg;
  const double hour_angle = (true_solar_min / 4.0 - 180.0) * kDeg;
  const double lat = obs.latitude_deg * kDeg;
  const double cos_zenith =
      std::clamp(std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle), -1.0, 1.0);
  return 90.0 - std::acos(cos_zenith) / kDeg;
}

void StageThresholds::validate() const {
  if (!(day_min > civil_min && civil_min > nautical_min && nautical_min > astro_min)) {
    throw ConfigError("stage thresholds must be strictly decreasing");
  }
}

DomainStage classify_stage(double e, const StageThresholds& t) {
  if (e > t.day_min) return DomainStage::Day;
  if (e > t.civil_min) return DomainStage::Civil;
  if (e > t.nautical_min) return DomainStage::Nautical;
  if (e > t.astro_min) return DomainStage::Astronomical;
  return DomainStage::Night;
}

std::size_t Partition::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

Partition partition_manifest(const std::vector<Frame>& frames, const StageThresholds& thresholds) {
  thresholds.validate();
  if (frames.empty()) throw ConfigError("no frames to partition");
  Partition p;
  for (const auto& f : frames) {
    const double e = solar_elevation(f.obs);
    const auto si = stage_index(classify_stage(e, thresholds));
    p.stages[si].push_back({f, e});
    ++p.counts[si];
  }
  return p;
}

std::vector<Frame> parse_frames_csv(std::istream& in) {
  std::vector<Frame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (lineno == 1 && line.rfind("id,", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 4) throw ParseError(lineno, "expected 4 comma-separated fields");
    Frame fr;
    fr.id = fields[0];
    if (fr.id.empty()) throw ParseError(lineno, "empty id");
    try {
      fr.obs.timestamp = parse_iso8601_utc(fields[1]);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    if (!parse_double(fields[2], fr.obs.latitude_deg) || !parse_double(fields[3], fr.obs.longitude_deg)) {
      throw ParseError(lineno, "latitude/longitude is not a number");
    }
    try {
      fr.obs.validate();
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

void write_partition(const Partition& partition, const std::filesystem::path& dir,
                     const std::filesystem::path& counts_path) {
  std::filesystem::create_directories(dir);
  if (counts_path.has_parent_path()) std::filesystem::create_directories(counts_path.parent_path());
  char buf[64];
  for (DomainStage s : kAllStages) {
    const auto path = dir / (std::string(stage_name(s)) + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id,iso8601_utc,lat_deg,lon_deg,elevation_deg\n";
    for (const auto& cf : partition.stages[stage_index(s)]) {
      out << cf.frame.id << ',' << format_iso8601_utc(cf.frame.obs.timestamp) << ',';
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.4f", cf.frame.obs.latitude_deg, cf.frame.obs.longitude_deg,
                    cf.elevation_deg);
      out << buf << '\n';
    }
  }
  std::ofstream counts(counts_path, std::ios::binary);
  if (!counts) throw IoError("cannot write " + counts_path.string());
  counts << "stage,count\n";
  for (DomainStage s : kAllStages) counts << stage_name(s) << ',' << partition.counts[stage_index(s)] << '\n';
}

}  // namespace twibridge::solar

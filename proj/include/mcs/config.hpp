#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/reward.hpp"

namespace mcs {

enum class DataSource : std::uint8_t { kSynthetic, kTripRecords };

/// Participant positions may also come from a time-ordered position file
/// (Date/Time, Lat, Lon); such files carry no drop-offs so they never feed tasks.
enum class ParticipantSource : std::uint8_t { kSameAsTasks, kSynthetic, kTripRecords, kPositions };

struct BoundingBox {
  double lat_min = 40.60;
  double lat_max = 40.90;
  double lon_min = -74.05;
  double lon_max = -73.75;

  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
  bool valid() const { return lat_max > lat_min && lon_max > lon_min; }
  bool operator==(const BoundingBox&) const = default;
};

struct SimConfig {
  int intervals_per_episode = 5;   // s
  int max_tasks_per_interval = 5;  // t
  int min_tasks_per_interval = 0;
  int num_participants = 15;  // p

  int grid_width = 10;
  int grid_height = 10;
  double speed_min = 1.0;
  double speed_max = 3.0;
  double weather_amplitude = 0.2;
  int weather_period = 24;

  double cancel_prob = 0.05;
  int required_participants = 1;
  int num_recruiters = 100;
  double fare_base = 2.0;
  double fare_rate = 0.5;
  double energy_e0 = 1.0;
  double energy_e1 = 0.1;

  std::string reward = "balanced";
  RewardWeights weights = preset("balanced");

  // 0 selects the derived default.
  double dist_scale = 0.0;
  double time_scale = 0.0;
  double fare_scale = 10.0;
  double energy_scale = 0.0;

  DataSource data_source = DataSource::kSynthetic;
  std::string trip_path;
  BoundingBox bbox;
  bool sample_with_replacement = true;
  ParticipantSource participant_source = ParticipantSource::kSameAsTasks;
  std::string participant_path;

  double wpf_radius = -1.0;  // < 0 selects (width + height) / 4

  std::uint64_t seed = 0;

  EnergyModel energy_model() const { return {energy_e0, energy_e1}; }

  double resolved_wpf_radius() const {
    return wpf_radius >= 0.0 ? wpf_radius : (grid_width + grid_height) / 4.0;
  }

  /// Fills the derived defaults: dist = width + height, time = s,
  /// energy = dist * (e0 + e1 * max_speed^2).
  NormalizationConstants normalization(int width, int height, double max_effective_speed) const {
    NormalizationConstants n;
    n.dist_scale = dist_scale > 0.0 ? dist_scale : static_cast<double>(width + height);
    n.time_scale = time_scale > 0.0 ? time_scale : static_cast<double>(intervals_per_episode);
    n.fare_scale = fare_scale;
    n.energy_scale = energy_scale > 0.0 ? energy_scale : n.dist_scale * energy_model().per_cell(max_effective_speed);
    return n;
  }

  bool operator==(const SimConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

template <class T>
T require_number(std::string_view key, std::string_view text) {
  T value{};
  if (!parse_number(text, value)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(key) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

inline bool require_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::kInvalidConfig, std::string(key) + ": expected boolean");
}

/// Shortest decimal form that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Applies a single `key = value` entry. Unknown keys are rejected.
inline void apply_config_entry(SimConfig& c, std::string_view key, std::string_view raw) {
  using detail::require_bool;
  using detail::require_number;
  const std::string_view v = detail::trim(raw);
  auto set_weight = [&c](double& field, double value) {
    if (field == value) return;
    field = value;
    c.reward = "custom";
  };
  if (key == "intervals_per_episode") c.intervals_per_episode = require_number<int>(key, v);
  else if (key == "max_tasks_per_interval") c.max_tasks_per_interval = require_number<int>(key, v);
  else if (key == "min_tasks_per_interval") c.min_tasks_per_interval = require_number<int>(key, v);
  else if (key == "num_participants") c.num_participants = require_number<int>(key, v);
  else if (key == "grid_width") c.grid_width = require_number<int>(key, v);
  else if (key == "grid_height") c.grid_height = require_number<int>(key, v);
  else if (key == "speed_min") c.speed_min = require_number<double>(key, v);
  else if (key == "speed_max") c.speed_max = require_number<double>(key, v);
  else if (key == "weather_amplitude") c.weather_amplitude = require_number<double>(key, v);
  else if (key == "weather_period") c.weather_period = require_number<int>(key, v);
  else if (key == "cancel_prob") c.cancel_prob = require_number<double>(key, v);
  else if (key == "required_participants") c.required_participants = require_number<int>(key, v);
  else if (key == "num_recruiters") c.num_recruiters = require_number<int>(key, v);
  else if (key == "fare_base") c.fare_base = require_number<double>(key, v);
  else if (key == "fare_rate") c.fare_rate = require_number<double>(key, v);
  else if (key == "energy_e0") c.energy_e0 = require_number<double>(key, v);
  else if (key == "energy_e1") c.energy_e1 = require_number<double>(key, v);
  else if (key == "reward") {
    c.weights = preset(v);
    c.reward = std::string(v);
  }
  else if (key == "w_assign_dist") set_weight(c.weights.w_assign_dist, require_number<double>(key, v));
  else if (key == "w_trip_dist") set_weight(c.weights.w_trip_dist, require_number<double>(key, v));
  else if (key == "w_time") set_weight(c.weights.w_time, require_number<double>(key, v));
  else if (key == "w_fairness") set_weight(c.weights.w_fairness, require_number<double>(key, v));
  else if (key == "w_energy") set_weight(c.weights.w_energy, require_number<double>(key, v));
  else if (key == "dist_scale") c.dist_scale = require_number<double>(key, v);
  else if (key == "time_scale") c.time_scale = require_number<double>(key, v);
  else if (key == "fare_scale") c.fare_scale = require_number<double>(key, v);
  else if (key == "energy_scale") c.energy_scale = require_number<double>(key, v);
  else if (key == "data_source") {
    if (v == "synthetic") c.data_source = DataSource::kSynthetic;
    else if (v == "trip_records") c.data_source = DataSource::kTripRecords;
    else throw Error(ErrorCode::kInvalidConfig, "data_source: expected synthetic | trip_records");
  } else if (key == "trip_path") c.trip_path = std::string(v);
  else if (key == "bbox_lat_min") c.bbox.lat_min = require_number<double>(key, v);
  else if (key == "bbox_lat_max") c.bbox.lat_max = require_number<double>(key, v);
  else if (key == "bbox_lon_min") c.bbox.lon_min = require_number<double>(key, v);
  else if (key == "bbox_lon_max") c.bbox.lon_max = require_number<double>(key, v);
  else if (key == "sample_with_replacement") c.sample_with_replacement = require_bool(key, v);
  else if (key == "participant_source") {
    if (v == "same_as_tasks") c.participant_source = ParticipantSource::kSameAsTasks;
    else if (v == "synthetic") c.participant_source = ParticipantSource::kSynthetic;
    else if (v == "trip_records") c.participant_source = ParticipantSource::kTripRecords;
    else if (v == "positions") c.participant_source = ParticipantSource::kPositions;
    else throw Error(ErrorCode::kInvalidConfig, "participant_source: expected same_as_tasks | synthetic | trip_records | positions");
  } else if (key == "participant_path") c.participant_path = std::string(v);
  else if (key == "wpf_radius") c.wpf_radius = require_number<double>(key, v);
  else if (key == "seed") c.seed = require_number<std::uint64_t>(key, v);
  else throw Error(ErrorCode::kInvalidConfig, "unknown key '" + std::string(key) + "'");
}

/// Applies entries in two passes so `reward = <preset>` never clobbers explicit weights.
inline void apply_config_entries(SimConfig& c, const std::vector<std::pair<std::string, std::string>>& entries) {
  for (const auto& [k, v] : entries) {
    if (k == "reward") apply_config_entry(c, k, v);
  }
  for (const auto& [k, v] : entries) {
    if (k != "reward") apply_config_entry(c, k, v);
  }
}

/// Parses flat `key = value` text. Blank lines and lines starting with '#' are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_config_entries(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    entries.emplace_back(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
  }
  return entries;
}

inline SimConfig parse_config(std::string_view text, SimConfig base = {}) {
  apply_config_entries(base, parse_config_entries(text));
  return base;
}

inline SimConfig load_config(const std::string& path, SimConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Field-level diagnostics; empty when the configuration is usable.
inline std::vector<std::string> config_diagnostics(const SimConfig& c) {
  std::vector<std::string> out;
  if (c.intervals_per_episode < 1) out.emplace_back("intervals_per_episode must be >= 1");
  if (c.max_tasks_per_interval < 1) out.emplace_back("max_tasks_per_interval must be >= 1");
  if (c.min_tasks_per_interval < 0 || c.min_tasks_per_interval > c.max_tasks_per_interval) {
    out.emplace_back("min_tasks_per_interval must lie in [0, max_tasks_per_interval]");
  }
  if (c.num_participants < 1) out.emplace_back("num_participants must be >= 1");
  if (c.grid_width < 1 || c.grid_height < 1) out.emplace_back("grid dimensions must be >= 1");
  if (!(c.speed_min > 0.0) || !(c.speed_max >= c.speed_min)) out.emplace_back("need 0 < speed_min <= speed_max");
  if (!(c.weather_amplitude >= 0.0 && c.weather_amplitude < 1.0)) out.emplace_back("weather_amplitude must lie in [0, 1)");
  if (c.weather_period < 1) out.emplace_back("weather_period must be >= 1");
  if (!(c.cancel_prob >= 0.0 && c.cancel_prob <= 1.0)) out.emplace_back("cancel_prob must lie in [0, 1]");
  if (c.required_participants < 1) out.emplace_back("required_participants must be >= 1");
  if (c.num_recruiters < 1) out.emplace_back("num_recruiters must be >= 1");
  if (!(c.fare_base >= 0.0) || !(c.fare_rate >= 0.0)) out.emplace_back("fare_base and fare_rate must be >= 0");
  if (!(c.energy_e0 >= 0.0) || !(c.energy_e1 >= 0.0)) out.emplace_back("energy_e0 and energy_e1 must be >= 0");
  if (!c.weights.valid()) out.emplace_back("reward weights must be >= 0 with at least one > 0");
  if (c.dist_scale < 0.0 || c.time_scale < 0.0 || !(c.fare_scale > 0.0) || c.energy_scale < 0.0) {
    out.emplace_back("normalization scales must be > 0 (0 selects the default where allowed)");
  }
  if (!c.bbox.valid()) out.emplace_back("bbox must have lat_max > lat_min and lon_max > lon_min");
  if (c.data_source == DataSource::kTripRecords && c.trip_path.empty()) {
    out.emplace_back("data_source = trip_records requires trip_path");
  }
  if (c.participant_source == ParticipantSource::kPositions && c.participant_path.empty()) {
    out.emplace_back("participant_source = positions requires participant_path");
  }
  if (c.participant_source == ParticipantSource::kTripRecords && c.trip_path.empty()) {
    out.emplace_back("participant_source = trip_records requires trip_path");
  }
  return out;
}

inline void validate_config(const SimConfig& c) {
  const auto diags = config_diagnostics(c);
  if (diags.empty()) return;
  std::string msg;
  for (const auto& d : diags) {
    if (!msg.empty()) msg += "; ";
    msg += d;
  }
  throw Error(ErrorCode::kInvalidConfig, msg);
}

/// Serialises every key in the same vocabulary apply_config_entry accepts.
inline std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& c) {
  using detail::format_double;
  std::vector<std::pair<std::string, std::string>> e;
  auto add = [&](std::string k, std::string v) { e.emplace_back(std::move(k), std::move(v)); };
  add("intervals_per_episode", std::to_string(c.intervals_per_episode));
  add("max_tasks_per_interval", std::to_string(c.max_tasks_per_interval));
  add("min_tasks_per_interval", std::to_string(c.min_tasks_per_interval));
  add("num_participants", std::to_string(c.num_participants));
  add("grid_width", std::to_string(c.grid_width));
  add("grid_height", std::to_string(c.grid_height));
  add("speed_min", format_double(c.speed_min));
  add("speed_max", format_double(c.speed_max));
  add("weather_amplitude", format_double(c.weather_amplitude));
  add("weather_period", std::to_string(c.weather_period));
  add("cancel_prob", format_double(c.cancel_prob));
  add("required_participants", std::to_string(c.required_participants));
  add("num_recruiters", std::to_string(c.num_recruiters));
  add("fare_base", format_double(c.fare_base));
  add("fare_rate", format_double(c.fare_rate));
  add("energy_e0", format_double(c.energy_e0));
  add("energy_e1", format_double(c.energy_e1));
  if (c.reward != "custom") add("reward", c.reward);
  add("w_assign_dist", format_double(c.weights.w_assign_dist));
  add("w_trip_dist", format_double(c.weights.w_trip_dist));
  add("w_time", format_double(c.weights.w_time));
  add("w_fairness", format_double(c.weights.w_fairness));
  add("w_energy", format_double(c.weights.w_energy));
  add("dist_scale", format_double(c.dist_scale));
  add("time_scale", format_double(c.time_scale));
  add("fare_scale", format_double(c.fare_scale));
  add("energy_scale", format_double(c.energy_scale));
  add("data_source", c.data_source == DataSource::kSynthetic ? "synthetic" : "trip_records");
  if (!c.trip_path.empty()) add("trip_path", c.trip_path);
  add("bbox_lat_min", format_double(c.bbox.lat_min));
  add("bbox_lat_max", format_double(c.bbox.lat_max));
  add("bbox_lon_min", format_double(c.bbox.lon_min));
  add("bbox_lon_max", format_double(c.bbox.lon_max));
  add("sample_with_replacement", c.sample_with_replacement ? "true" : "false");
  constexpr std::string_view kSources[] = {"same_as_tasks", "synthetic", "trip_records", "positions"};
  add("participant_source", std::string(kSources[static_cast<int>(c.participant_source)]));
  if (!c.participant_path.empty()) add("participant_path", c.participant_path);
  add("wpf_radius", format_double(c.wpf_radius));
  add("seed", std::to_string(c.seed));
  return e;
}

}  // namespace mcs

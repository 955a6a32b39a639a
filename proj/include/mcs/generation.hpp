#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcs/config.hpp"
#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/rng.hpp"

namespace mcs {

struct TripRecord {
  std::int64_t pickup_time = 0;   // seconds since 1970-01-01 UTC
  std::int64_t dropoff_time = 0;  // seconds since 1970-01-01 UTC
  double pickup_lat = 0.0;
  double pickup_lon = 0.0;
  double dropoff_lat = 0.0;
  double dropoff_lon = 0.0;
  double trip_distance = 0.0;  // km
  double fare = 0.0;

  bool operator==(const TripRecord&) const = default;
};

/// Ingested, bbox-filtered records plus their projections onto the grid they were
/// ingested for. Immutable after construction.
struct TripPool {
  std::vector<TripRecord> records;
  std::vector<GridCoord> pickup_cells;
  std::vector<GridCoord> dropoff_cells;
  BoundingBox bbox;

  bool empty() const { return records.empty(); }
  bool operator==(const TripPool&) const = default;
};

struct IngestionReport {
  std::size_t rows = 0;
  std::size_t parsed = 0;
  std::size_t malformed = 0;
  std::size_t out_of_bounds = 0;

  bool operator==(const IngestionReport&) const = default;
};

/// Fraction of a cell within which a projected coordinate counts as lying on the
/// boundary above it. Absorbs decimal-degree rounding (0.15 / 0.3 * 10 < 5 in binary).
inline constexpr double kCellBoundarySnap = 1e-9;

/// Affine map of the bbox onto [0, width) x [0, height), then floor. Longitude drives x,
/// latitude drives y; the upper boundary maps into the last cell.
inline GridCoord latlon_to_grid(double lat, double lon, const BoundingBox& bbox, int width, int height) {
  if (!bbox.contains(lat, lon)) {
    throw Error(ErrorCode::kOutOfBbox, "(" + detail::format_double(lat) + ", " + detail::format_double(lon) + ")");
  }
  auto project = [](double v, double lo, double hi, int cells) {
    const int cell = static_cast<int>(std::floor((v - lo) / (hi - lo) * cells + kCellBoundarySnap));
    return std::clamp(cell, 0, cells - 1);
  };
  return {project(lon, bbox.lon_min, bbox.lon_max, width), project(lat, bbox.lat_min, bbox.lat_max, height)};
}

inline GridCoord latlon_to_grid(double lat, double lon, const BoundingBox& bbox, const GridMap& grid) {
  return latlon_to_grid(lat, lon, bbox, grid.width(), grid.height());
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parses `YYYY-MM-DD HH:MM:SS` (UTC) into epoch seconds.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  s = trim(s);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
      s[16] != ':') {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0;
  unsigned d = 0;
  int hh = 0;
  int mm = 0;
  int ss = 0;
  if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), mo) || !parse_number(s.substr(8, 2), d) ||
      !parse_number(s.substr(11, 2), hh) || !parse_number(s.substr(14, 2), mm) ||
      !parse_number(s.substr(17, 2), ss)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60 || hh < 0 || mm < 0 || ss < 0) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path);
  return in;
}

inline std::vector<std::size_t> locate_columns(std::string_view header, std::span<const std::string_view> required,
                                               const std::string& path) {
  const auto names = split_csv(header);
  std::vector<std::size_t> index;
  for (std::string_view col : required) {
    std::size_t found = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == col) found = i;
    }
    if (found == names.size()) {
      throw Error(ErrorCode::kSchemaMismatch, path + ": missing column '" + std::string(col) + "'");
    }
    index.push_back(found);
  }
  return index;
}

}  // namespace detail

inline constexpr std::string_view kTripColumns[] = {
    "pickup_datetime",  "dropoff_datetime",  "pickup_latitude", "pickup_longitude",
    "dropoff_latitude", "dropoff_longitude", "trip_distance",   "fare_amount"};

/// Reads a trip-record CSV. Malformed rows (unparseable fields, dropoff before pickup,
/// negative fare or distance) and out-of-bbox rows are skipped and counted.
inline std::pair<TripPool, IngestionReport> ingest_trip_records(const std::string& path, const BoundingBox& bbox,
                                                                const GridMap& grid) {
  std::ifstream in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchemaMismatch, path + ": missing header");
  const auto cols = detail::locate_columns(line, kTripColumns, path);

  TripPool pool;
  pool.bbox = bbox;
  IngestionReport report;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++report.rows;
    const auto fields = detail::split_csv(line);
    TripRecord r;
    bool ok = true;
    auto field = [&](std::size_t k) -> std::string_view {
      if (cols[k] >= fields.size()) {
        ok = false;
        return {};
      }
      return fields[cols[k]];
    };
    const auto pickup = detail::parse_timestamp(field(0));
    const auto dropoff = detail::parse_timestamp(field(1));
    ok = ok && pickup && dropoff;
    ok = ok && detail::parse_number(field(2), r.pickup_lat) && detail::parse_number(field(3), r.pickup_lon);
    ok = ok && detail::parse_number(field(4), r.dropoff_lat) && detail::parse_number(field(5), r.dropoff_lon);
    ok = ok && detail::parse_number(field(6), r.trip_distance) && detail::parse_number(field(7), r.fare);
    if (ok) {
      r.pickup_time = *pickup;
      r.dropoff_time = *dropoff;
      ok = r.dropoff_time >= r.pickup_time && r.fare >= 0.0 && r.trip_distance >= 0.0 &&
           std::isfinite(r.pickup_lat + r.pickup_lon + r.dropoff_lat + r.dropoff_lon + r.fare + r.trip_distance);
    }
    if (!ok) {
      ++report.malformed;
      continue;
    }
    if (!bbox.contains(r.pickup_lat, r.pickup_lon) || !bbox.contains(r.dropoff_lat, r.dropoff_lon)) {
      ++report.out_of_bounds;
      continue;
    }
    pool.pickup_cells.push_back(latlon_to_grid(r.pickup_lat, r.pickup_lon, bbox, grid));
    pool.dropoff_cells.push_back(latlon_to_grid(r.dropoff_lat, r.dropoff_lon, bbox, grid));
    pool.records.push_back(r);
    ++report.parsed;
  }
  return {std::move(pool), report};
}

inline constexpr std::string_view kPositionColumns[] = {"Date/Time", "Lat", "Lon"};

/// Reads a vehicle position log (`Date/Time,Lat,Lon[,...]`) into grid cells. Such logs
/// have no drop-offs and only ever seed participant positions.
inline std::pair<std::vector<GridCoord>, IngestionReport> ingest_positions(const std::string& path,
                                                                           const BoundingBox& bbox,
                                                                           const GridMap& grid) {
  std::ifstream in = detail::open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchemaMismatch, path + ": missing header");
  const auto cols = detail::locate_columns(line, kPositionColumns, path);
  std::vector<GridCoord> cells;
  IngestionReport report;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++report.rows;
    const auto fields = detail::split_csv(line);
    double lat = 0.0;
    double lon = 0.0;
    if (cols[1] >= fields.size() || cols[2] >= fields.size() || !detail::parse_number(fields[cols[1]], lat) ||
        !detail::parse_number(fields[cols[2]], lon)) {
      ++report.malformed;
      continue;
    }
    if (!bbox.contains(lat, lon)) {
      ++report.out_of_bounds;
      continue;
    }
    cells.push_back(latlon_to_grid(lat, lon, bbox, grid));
    ++report.parsed;
  }
  return {std::move(cells), report};
}

/// Fixed participants and per-interval task lists, for hand-built instances.
struct Scenario {
  GridMap grid;
  std::vector<GridCoord> participant_positions;
  std::vector<std::vector<Task>> tasks_by_interval;  // ids and arrival intervals are reassigned
};

/// ceil(2 * travel time at the origin's base speed), at least one interval.
inline int default_time_limit(GridCoord origin, GridCoord destination, const GridMap& grid) {
  const double travel = grid_distance(origin, destination) / grid.base_speed(origin);
  return std::max(1, static_cast<int>(std::ceil(2.0 * travel)));
}

/// The task and participant generators of one episode. Copyable; record pools are shared
/// immutably between copies.
class Generator {
 public:
  enum class Kind : std::uint8_t { kSynthetic, kTripRecords, kScripted };

  static Generator synthetic(const SimConfig& config, GridMap grid) {
    Generator g(config, std::move(grid));
    g.kind_ = Kind::kSynthetic;
    return g;
  }

  /// Without-replacement sampling walks a permutation shuffled here from `shuffle_rng`.
  static Generator from_pool(const SimConfig& config, GridMap grid, std::shared_ptr<const TripPool> pool,
                             Rng& shuffle_rng) {
    Generator g(config, std::move(grid));
    g.kind_ = Kind::kTripRecords;
    g.pool_ = std::move(pool);
    if (!config.sample_with_replacement && g.pool_) {
      g.order_.resize(g.pool_->records.size());
      for (std::size_t i = 0; i < g.order_.size(); ++i) g.order_[i] = static_cast<std::uint32_t>(i);
      for (std::size_t i = g.order_.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(g.order_[i - 1], g.order_[j]);
      }
    }
    return g;
  }

  static Generator scripted(const SimConfig& config, Scenario scenario) {
    Generator g(config, scenario.grid);
    g.kind_ = Kind::kScripted;
    g.scenario_ = std::make_shared<const Scenario>(std::move(scenario));
    return g;
  }

  /// Overrides where participant positions come from (independent of the task source).
  void set_participant_pool(std::shared_ptr<const TripPool> pool) {
    participant_pool_ = std::move(pool);
    participant_positions_.reset();
  }
  void set_participant_positions(std::shared_ptr<const std::vector<GridCoord>> cells) {
    participant_positions_ = std::move(cells);
    participant_pool_.reset();
  }
  void set_synthetic_participants() {
    participant_pool_.reset();
    participant_positions_.reset();
    synthetic_participants_ = true;
  }

  Kind kind() const { return kind_; }
  const GridMap& grid() const { return grid_; }
  int next_task_id() const { return next_task_id_; }

  /// New tasks arriving in `interval`. Synthetic and record-backed sources draw a count
  /// uniformly from [min_tasks_per_interval, max_tasks]; scripted sources replay their list.
  std::vector<Task> sample_tasks(int interval, Rng& rng, int max_tasks) {
    std::vector<Task> out;
    if (kind_ == Kind::kScripted) {
      if (interval >= 0 && static_cast<std::size_t>(interval) < scenario_->tasks_by_interval.size()) {
        for (Task t : scenario_->tasks_by_interval[static_cast<std::size_t>(interval)]) {
          t.id = next_task_id_++;
          t.arrival_interval = interval;
          t.status = TaskStatus::kPending;
          out.push_back(t);
        }
      }
      return out;
    }
    if (max_tasks <= 0) return out;
    const int lo = std::min(min_tasks_, max_tasks);
    const auto count = static_cast<int>(rng.uniform_int(lo, max_tasks));
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      Task t;
      t.arrival_interval = interval;
      t.required_participants = required_participants_;
      if (kind_ == Kind::kSynthetic) {
        t.origin = random_cell(rng);
        t.destination = random_cell(rng);
        t.recruiter_id = static_cast<int>(rng.uniform_int(0, num_recruiters_ - 1));
        t.fare = fare_base_ + fare_rate_ * grid_distance(t.origin, t.destination);
      } else {
        const std::size_t idx = draw_record(rng);
        t.origin = pool_->pickup_cells[idx];
        t.destination = pool_->dropoff_cells[idx];
        t.recruiter_id = static_cast<int>(idx);
        t.fare = pool_->records[idx].fare;
      }
      t.time_limit = default_time_limit(t.origin, t.destination, grid_);
      t.id = next_task_id_++;
      out.push_back(t);
    }
    return out;
  }

  /// Exactly `count` fresh participants with ids 0..count-1 (scripted sources use their
  /// own roster). Record-backed positions are drawn with replacement.
  std::vector<Participant> sample_participants(Rng& rng, int count) {
    std::vector<Participant> out;
    if (kind_ == Kind::kScripted) {
      for (GridCoord c : scenario_->participant_positions) {
        Participant p;
        p.id = static_cast<int>(out.size());
        p.position = c;
        out.push_back(p);
      }
      return out;
    }
    const TripPool* pool = participant_pool_ ? participant_pool_.get() : nullptr;
    if (!pool && !synthetic_participants_ && !participant_positions_ && kind_ == Kind::kTripRecords) pool = pool_.get();
    if (pool && pool->empty()) throw Error(ErrorCode::kEmptyPool, "no records to draw participant positions from");
    if (participant_positions_ && participant_positions_->empty()) {
      throw Error(ErrorCode::kEmptyPool, "no positions to draw participants from");
    }
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
      Participant p;
      p.id = i;
      if (participant_positions_) {
        const auto n = static_cast<std::int64_t>(participant_positions_->size());
        p.position = (*participant_positions_)[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
      } else if (pool) {
        const auto n = static_cast<std::int64_t>(pool->records.size());
        p.position = pool->pickup_cells[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
      } else {
        p.position = random_cell(rng);
      }
      out.push_back(p);
    }
    return out;
  }

 private:
  Generator(const SimConfig& c, GridMap grid)
      : grid_(std::move(grid)),
        min_tasks_(c.min_tasks_per_interval),
        required_participants_(c.required_participants),
        num_recruiters_(c.num_recruiters),
        fare_base_(c.fare_base),
        fare_rate_(c.fare_rate),
        with_replacement_(c.sample_with_replacement) {}

  GridCoord random_cell(Rng& rng) const {
    const auto x = static_cast<int>(rng.uniform_int(0, grid_.width() - 1));
    const auto y = static_cast<int>(rng.uniform_int(0, grid_.height() - 1));
    return {x, y};
  }

  std::size_t draw_record(Rng& rng) {
    if (!pool_ || pool_->empty()) throw Error(ErrorCode::kEmptyPool, "trip pool is empty");
    if (with_replacement_) {
      return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool_->records.size()) - 1));
    }
    if (cursor_ >= order_.size()) throw Error(ErrorCode::kEmptyPool, "trip pool exhausted (sampling without replacement)");
    return order_[cursor_++];
  }

  Kind kind_ = Kind::kSynthetic;
  GridMap grid_;
  int min_tasks_ = 0;
  int required_participants_ = 1;
  int num_recruiters_ = 100;
  double fare_base_ = 2.0;
  double fare_rate_ = 0.5;
  bool with_replacement_ = true;
  int next_task_id_ = 0;

  std::shared_ptr<const TripPool> pool_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
  std::shared_ptr<const Scenario> scenario_;

  std::shared_ptr<const TripPool> participant_pool_;
  std::shared_ptr<const std::vector<GridCoord>> participant_positions_;
  bool synthetic_participants_ = false;
};

}  // namespace mcs

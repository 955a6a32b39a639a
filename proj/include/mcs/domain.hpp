#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcs/error.hpp"

namespace mcs {

struct GridCoord {
  int x = 0;
  int y = 0;

  auto operator<=>(const GridCoord&) const = default;
};

/// Manhattan distance in cells; movement is 4-neighbour.
constexpr int grid_distance(GridCoord a, GridCoord b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

/// Rectangular city grid with per-cell base speeds (cells per interval) modulated by a
/// global sinusoidal weather factor.
class GridMap {
 public:
  GridMap() : GridMap(1, 1, std::vector<double>{1.0}, 0.0, 1) {}

  GridMap(int width, int height, std::vector<double> base_speeds, double weather_amplitude,
          int weather_period)
      : width_(width),
        height_(height),
        base_speeds_(std::move(base_speeds)),
        weather_amplitude_(weather_amplitude),
        weather_period_(weather_period) {
    if (width_ < 1 || height_ < 1) throw Error(ErrorCode::kInvalidConfig, "grid dimensions must be >= 1");
    if (base_speeds_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw Error(ErrorCode::kInvalidConfig, "base speed count does not match grid size");
    }
    for (double v : base_speeds_) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kInvalidConfig, "base speeds must be > 0");
    }
    if (!(weather_amplitude_ >= 0.0 && weather_amplitude_ < 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "weather_amplitude must lie in [0, 1)");
    }
    if (weather_period_ < 1) throw Error(ErrorCode::kInvalidConfig, "weather_period must be >= 1");
    max_base_speed_ = *std::max_element(base_speeds_.begin(), base_speeds_.end());
  }

  static GridMap uniform(int width, int height, double speed, double weather_amplitude = 0.0,
                         int weather_period = 1) {
    return GridMap(width, height,
                   std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                           static_cast<std::size_t>(std::max(height, 0)),
                                       speed),
                   weather_amplitude, weather_period);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double weather_amplitude() const { return weather_amplitude_; }
  int weather_period() const { return weather_period_; }
  std::span<const double> base_speeds() const { return base_speeds_; }

  bool contains(GridCoord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  double base_speed(GridCoord c) const {
    return base_speeds_[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
                        static_cast<std::size_t>(c.x)];
  }

  double weather_factor(int interval) const {
    if (weather_amplitude_ == 0.0) return 1.0;
    return 1.0 + weather_amplitude_ * std::sin(2.0 * std::numbers::pi * interval / weather_period_);
  }

  double effective_speed(GridCoord c, int interval) const { return base_speed(c) * weather_factor(interval); }

  /// Upper bound of effective_speed over all cells and intervals.
  double max_effective_speed() const { return max_base_speed_ * (1.0 + weather_amplitude_); }

  bool operator==(const GridMap&) const = default;

 private:
  int width_;
  int height_;
  std::vector<double> base_speeds_;
  double weather_amplitude_;
  int weather_period_;
  double max_base_speed_ = 1.0;
};

enum class TaskStatus : std::uint8_t { kPending, kAssigned, kInService, kCompleted, kCancelled, kExpired };

constexpr std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kAssigned: return "assigned";
    case TaskStatus::kInService: return "in_service";
    case TaskStatus::kCompleted: return "completed";
    case TaskStatus::kCancelled: return "cancelled";
    case TaskStatus::kExpired: return "expired";
  }
  return "?";
}

/// Legal lifecycle edges: pending -> assigned -> in_service -> completed, or
/// pending -> cancelled / expired.
constexpr bool is_legal_transition(TaskStatus from, TaskStatus to) {
  switch (from) {
    case TaskStatus::kPending:
      return to == TaskStatus::kAssigned || to == TaskStatus::kCancelled || to == TaskStatus::kExpired;
    case TaskStatus::kAssigned: return to == TaskStatus::kInService;
    case TaskStatus::kInService: return to == TaskStatus::kCompleted;
    default: return false;
  }
}

struct Task {
  int id = 0;
  int recruiter_id = 0;
  GridCoord origin;
  GridCoord destination;
  int arrival_interval = 0;
  double fare = 0.0;
  int time_limit = 1;
  int required_participants = 1;
  TaskStatus status = TaskStatus::kPending;

  bool operator==(const Task&) const = default;
};

struct Participant {
  int id = 0;
  GridCoord position;
  std::vector<int> queue;  // FIFO of task ids; front is being served
  std::optional<int> busy_until;
  int cum_tasks_completed = 0;
  int cum_tasks_assigned = 0;
  double cum_incentive = 0.0;
  int cum_distance = 0;
  int cum_service_time = 0;
  double cum_assign_distance = 0.0;

  // Movement state of the task at the queue front.
  double carry = 0.0;
  bool carrying = false;

  bool available() const { return queue.empty() && !busy_until.has_value(); }

  bool operator==(const Participant&) const = default;
};

/// Row-major feature matrix with a per-row validity mask. Invalid rows are all-zero.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0), mask(r, 0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::size_t valid_rows() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

  bool operator==(const FeatureMatrix&) const = default;
};

inline constexpr std::size_t kTaskFeatureWidth = 9;
inline constexpr std::size_t kParticipantFeatureWidth = 8;

struct Observation {
  int interval = 0;
  FeatureMatrix task_features;
  FeatureMatrix participant_features;
  std::vector<int> task_ids;         // ids of the valid task rows, in row order
  std::vector<int> participant_ids;  // ids of the valid participant rows, in row order
  bool env_features_embedded = true;

  bool operator==(const Observation&) const = default;
};

struct Assignment {
  int task_id = 0;
  std::vector<int> participant_ids;

  bool operator==(const Assignment&) const = default;
};

struct Action {
  std::vector<Assignment> assignments;

  bool operator==(const Action&) const = default;
};

enum class ViolationKind : std::uint8_t {
  kUnknownTask,
  kUnknownParticipant,
  kDuplicateParticipant,
  kWrongPartySize,
  kDuplicateTask,
};

constexpr std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kUnknownTask: return "UNKNOWN_TASK";
    case ViolationKind::kUnknownParticipant: return "UNKNOWN_PARTICIPANT";
    case ViolationKind::kDuplicateParticipant: return "DUPLICATE_PARTICIPANT";
    case ViolationKind::kWrongPartySize: return "WRONG_PARTY_SIZE";
    case ViolationKind::kDuplicateTask: return "DUPLICATE_TASK";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  int task_id = -1;
  int participant_id = -1;

  std::string describe() const {
    std::string out(to_string(kind));
    out += " task=" + std::to_string(task_id);
    if (participant_id >= 0) out += " participant=" + std::to_string(participant_id);
    return out;
  }

  bool operator==(const Violation&) const = default;
};

/// Checks an action against the pending tasks and roster. Returns the first violation
/// found, scanning assignments in order; std::nullopt means the action is executable.
/// Participant ids are dense: participant k sits at roster[k].
inline std::optional<Violation> validate_action(const Action& action, std::span<const Task> pending,
                                                std::span<const Participant> roster) {
  std::vector<int> used_tasks;
  std::vector<std::uint8_t> taken(roster.size(), 0);
  for (const Assignment& a : action.assignments) {
    const auto it = std::find_if(pending.begin(), pending.end(), [&](const Task& t) { return t.id == a.task_id; });
    if (it == pending.end() || it->status != TaskStatus::kPending) {
      return Violation{ViolationKind::kUnknownTask, a.task_id};
    }
    if (std::find(used_tasks.begin(), used_tasks.end(), a.task_id) != used_tasks.end()) {
      return Violation{ViolationKind::kDuplicateTask, a.task_id};
    }
    used_tasks.push_back(a.task_id);
    if (a.participant_ids.size() != static_cast<std::size_t>(it->required_participants)) {
      return Violation{ViolationKind::kWrongPartySize, a.task_id};
    }
    for (int pid : a.participant_ids) {
      if (pid < 0 || static_cast<std::size_t>(pid) >= roster.size() || roster[static_cast<std::size_t>(pid)].id != pid) {
        return Violation{ViolationKind::kUnknownParticipant, a.task_id, pid};
      }
      auto& flag = taken[static_cast<std::size_t>(pid)];
      if (flag) return Violation{ViolationKind::kDuplicateParticipant, a.task_id, pid};
      flag = 1;
    }
  }
  return std::nullopt;
}

/// Weights over the five higher-is-better objective components.
struct RewardWeights {
  double w_assign_dist = 1.0;
  double w_trip_dist = 1.0;
  double w_time = 1.0;
  double w_fairness = 1.0;
  double w_energy = 1.0;

  bool valid() const {
    const double w[] = {w_assign_dist, w_trip_dist, w_time, w_fairness, w_energy};
    bool any_positive = false;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) return false;
      any_positive = any_positive || v > 0.0;
    }
    return any_positive;
  }

  bool operator==(const RewardWeights&) const = default;
};

struct RewardBreakdown {
  double o_assign_dist = 0.0;
  double o_trip_dist = 0.0;
  double o_time = 0.0;
  double o_fairness = 0.0;
  double o_energy = 0.0;
  double total = 0.0;

  RewardBreakdown& operator+=(const RewardBreakdown& o) {
    o_assign_dist += o.o_assign_dist;
    o_trip_dist += o.o_trip_dist;
    o_time += o.o_time;
    o_fairness += o.o_fairness;
    o_energy += o.o_energy;
    total += o.total;
    return *this;
  }

  bool operator==(const RewardBreakdown&) const = default;
};

}  // namespace mcs

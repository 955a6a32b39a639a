#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcs/config.hpp"
#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/generation.hpp"
#include "mcs/reward.hpp"
#include "mcs/rng.hpp"

namespace mcs {

enum class EventType : std::uint8_t { kArrive, kAssign, kPickup, kComplete, kCancel, kExpire };

constexpr std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::kArrive: return "ARRIVE";
    case EventType::kAssign: return "ASSIGN";
    case EventType::kPickup: return "PICKUP";
    case EventType::kComplete: return "COMPLETE";
    case EventType::kCancel: return "CANCEL";
    case EventType::kExpire: return "EXPIRE";
  }
  return "?";
}

struct Event {
  int interval = 0;
  EventType type = EventType::kArrive;
  int task_id = -1;
  int participant_id = -1;  // -1 for task-only events
  GridCoord cell;

  bool operator==(const Event&) const = default;
};

/// `interval,event_type,task_id,participant_id,cell_x,cell_y`
inline std::string format_event(const Event& e) {
  return std::to_string(e.interval) + "," + std::string(to_string(e.type)) + "," + std::to_string(e.task_id) + "," +
         std::to_string(e.participant_id) + "," + std::to_string(e.cell.x) + "," + std::to_string(e.cell.y);
}

inline void write_event_log(std::ostream& out, std::span<const Event> events) {
  out << "interval,event_type,task_id,participant_id,cell_x,cell_y\n";
  for (const Event& e : events) out << format_event(e) << '\n';
}

struct StepInfo {
  int arrivals = 0;
  int assignments = 0;
  int pickups = 0;
  int completions = 0;
  int cancellations = 0;
  int expirations = 0;

  bool operator==(const StepInfo&) const = default;
};

struct Transition {
  Observation observation;
  double reward = 0.0;
  RewardBreakdown breakdown;
  bool done = false;
  StepInfo info;

  bool operator==(const Transition&) const = default;
};

/// Read-only view handed to selection policies. Pending tasks are in arrival order.
struct StateView {
  int interval = 0;
  int intervals_per_episode = 1;
  std::span<const Task> pending;
  std::span<const Participant> participants;
  const GridMap* grid = nullptr;
};

/// Task counts by lifecycle bucket. "in_service" includes assigned tasks still
/// awaiting pickup.
struct TaskAccounting {
  int generated = 0;
  int completed = 0;
  int cancelled = 0;
  int expired = 0;
  int pending = 0;
  int in_service = 0;

  bool balanced() const { return generated == completed + cancelled + expired + pending + in_service; }
};

/// Work done for one task during one advance call.
struct LegEffect {
  int task_id = -1;
  double energy = 0.0;
  bool finished = false;  // this participant's part of the task is done
};

struct AdvanceEffects {
  std::vector<Event> events;
  std::vector<LegEffect> legs;

  void clear() {
    events.clear();
    legs.clear();
  }
};

/// Moves a participant one interval along the x-then-y path toward its current waypoint
/// (task origin, then destination). The interval's movement budget is the effective speed
/// of the starting cell; unused fractional budget carries over while the queue is
/// non-empty, including into the next queued task. Events are stamped `interval + 1`.
inline void advance_participant(Participant& p, std::span<const Task> tasks_by_id, const GridMap& grid, int interval,
                                const EnergyModel& energy, AdvanceEffects& out) {
  if (p.queue.empty()) return;
  const double speed = grid.effective_speed(p.position, interval);
  const double cell_energy = energy.per_cell(speed);
  const int stamp = interval + 1;
  p.carry += speed;
  ++p.cum_service_time;
  LegEffect* leg = nullptr;
  while (!p.queue.empty()) {
    const Task& task = tasks_by_id[static_cast<std::size_t>(p.queue.front())];
    if (!leg || leg->task_id != task.id) {
      out.legs.push_back({task.id, 0.0, false});
      leg = &out.legs.back();
    }
    const GridCoord target = p.carrying ? task.destination : task.origin;
    if (p.position == target) {
      if (!p.carrying) {
        p.carrying = true;
        out.events.push_back({stamp, EventType::kPickup, task.id, p.id, p.position});
        continue;
      }
      out.events.push_back({stamp, EventType::kComplete, task.id, p.id, p.position});
      leg->finished = true;
      leg = nullptr;
      p.carrying = false;
      p.cum_tasks_completed += 1;
      p.cum_incentive += task.fare / task.required_participants;
      p.queue.erase(p.queue.begin());
      continue;
    }
    if (p.carry < 1.0) break;
    if (p.position.x != target.x) {
      p.position.x += target.x > p.position.x ? 1 : -1;
    } else {
      p.position.y += target.y > p.position.y ? 1 : -1;
    }
    p.carry -= 1.0;
    p.cum_distance += 1;
    leg->energy += cell_energy;
  }
  if (p.queue.empty()) p.carry = 0.0;
}

/// Cells left to travel across the whole queue.
inline int remaining_path(const Participant& p, std::span<const Task> tasks_by_id) {
  int cells = 0;
  GridCoord pos = p.position;
  for (std::size_t k = 0; k < p.queue.size(); ++k) {
    const Task& t = tasks_by_id[static_cast<std::size_t>(p.queue[k])];
    if (!(k == 0 && p.carrying)) {
      cells += grid_distance(pos, t.origin);
      pos = t.origin;
    }
    cells += grid_distance(pos, t.destination);
    pos = t.destination;
  }
  return cells;
}

/// Record pools shared across episodes; loaded once per configuration.
struct DataResources {
  std::shared_ptr<const TripPool> trips;
  IngestionReport trip_report;
  std::shared_ptr<const std::vector<GridCoord>> positions;
  IngestionReport position_report;
};

inline DataResources load_resources(const SimConfig& c) {
  DataResources r;
  const GridMap shape = GridMap::uniform(c.grid_width, c.grid_height, 1.0);
  const bool need_trips = c.data_source == DataSource::kTripRecords ||
                          c.participant_source == ParticipantSource::kTripRecords;
  if (need_trips) {
    auto [pool, report] = ingest_trip_records(c.trip_path, c.bbox, shape);
    r.trips = std::make_shared<const TripPool>(std::move(pool));
    r.trip_report = report;
  }
  if (c.participant_source == ParticipantSource::kPositions) {
    auto [cells, report] = ingest_positions(c.participant_path, c.bbox, shape);
    r.positions = std::make_shared<const std::vector<GridCoord>>(std::move(cells));
    r.position_report = report;
  }
  return r;
}

/// Interval-stepped environment. A value type: copying yields an independent
/// environment that replays identically given identical actions.
class Simulator {
 public:
  Simulator() = default;

  Observation reset(const SimConfig& config, std::uint64_t seed) {
    validate_config(config);
    return reset(config, seed, load_resources(config));
  }

  Observation reset(const SimConfig& config, std::uint64_t seed, const DataResources& resources) {
    validate_config(config);
    Rng speed_rng(mix64(seed ^ 0x7370656564ULL));
    std::vector<double> speeds(static_cast<std::size_t>(config.grid_width) * static_cast<std::size_t>(config.grid_height));
    for (double& v : speeds) {
      v = config.speed_min == config.speed_max ? config.speed_min : speed_rng.uniform(config.speed_min, config.speed_max);
    }
    GridMap grid(config.grid_width, config.grid_height, std::move(speeds), config.weather_amplitude,
                 config.weather_period);

    Generator gen = Generator::synthetic(config, grid);
    if (config.data_source == DataSource::kTripRecords) {
      Rng shuffle_rng(mix64(seed ^ 0x73687566ULL));
      gen = Generator::from_pool(config, grid, resources.trips, shuffle_rng);
    }
    switch (config.participant_source) {
      case ParticipantSource::kSameAsTasks: break;
      case ParticipantSource::kSynthetic: gen.set_synthetic_participants(); break;
      case ParticipantSource::kTripRecords: gen.set_participant_pool(resources.trips); break;
      case ParticipantSource::kPositions: gen.set_participant_positions(resources.positions); break;
    }
    return start(config, seed, std::move(grid), std::move(gen), config.max_tasks_per_interval * config.intervals_per_episode);
  }

  /// Hand-built instance: the scenario fixes the grid, roster and arriving tasks;
  /// `config` supplies horizon, cancellation, energy, reward and normalisation settings.
  Observation reset(const SimConfig& config, Scenario scenario, std::uint64_t seed = 0) {
    SimConfig c = config;
    c.grid_width = scenario.grid.width();
    c.grid_height = scenario.grid.height();
    c.num_participants = std::max<int>(1, static_cast<int>(scenario.participant_positions.size()));
    validate_config(c);
    std::size_t total = 0;
    for (auto& list : scenario.tasks_by_interval) {
      total += list.size();
      for (const Task& t : list) {
        if (!scenario.grid.contains(t.origin) || !scenario.grid.contains(t.destination) || t.time_limit < 1 ||
            t.required_participants < 1 || !(t.fare >= 0.0)) {
          throw Error(ErrorCode::kInvalidConfig, "scenario task violates Task invariants");
        }
      }
    }
    for (GridCoord pos : scenario.participant_positions) {
      if (!scenario.grid.contains(pos)) throw Error(ErrorCode::kInvalidConfig, "scenario participant outside grid");
    }
    GridMap grid = scenario.grid;
    const int rows = std::max(c.max_tasks_per_interval * c.intervals_per_episode, static_cast<int>(total));
    return start(c, seed, grid, Generator::scripted(c, std::move(scenario)), rows);
  }

  Transition step(const Action& action) {
    if (done_) throw Error(ErrorCode::kEpisodeDone, "episode finished at interval " + std::to_string(interval_));
    if (auto v = validate_action(action, pending_, participants_)) {
      throw Error(ErrorCode::kInvalidAssignment, v->describe());
    }
    const int h = interval_;
    StepInfo info;
    IntervalTally tally;
    tally.dispersion_before = dispersion_;

    for (const Assignment& a : action.assignments) {
      auto it = std::find_if(pending_.begin(), pending_.end(), [&](const Task& t) { return t.id == a.task_id; });
      Task& task = tasks_[static_cast<std::size_t>(a.task_id)];
      set_status(task, TaskStatus::kAssigned);
      pending_.erase(it);
      parties_left_[static_cast<std::size_t>(task.id)] = static_cast<int>(a.participant_ids.size());
      for (int pid : a.participant_ids) {
        Participant& p = participants_[static_cast<std::size_t>(pid)];
        const int d = grid_distance(p.position, task.origin);
        tally.assign_distance += d;
        p.cum_assign_distance += d;
        p.cum_tasks_assigned += 1;
        p.queue.push_back(task.id);
        events_.push_back({h, EventType::kAssign, task.id, pid, p.position});
        ++info.assignments;
      }
    }

    for (Participant& p : participants_) {
      if (p.queue.empty()) continue;
      effects_.clear();
      advance_participant(p, tasks_, grid_, h, energy_, effects_);
      for (const Event& e : effects_.events) {
        events_.push_back(e);
        if (e.type == EventType::kPickup) {
          ++info.pickups;
          Task& task = tasks_[static_cast<std::size_t>(e.task_id)];
          if (task.status == TaskStatus::kAssigned) set_status(task, TaskStatus::kInService);
        }
      }
      for (const LegEffect& leg : effects_.legs) {
        const auto id = static_cast<std::size_t>(leg.task_id);
        task_energy_[id] += leg.energy;
        if (!leg.finished || --parties_left_[id] > 0) continue;
        Task& task = tasks_[id];
        set_status(task, TaskStatus::kCompleted);
        const double time_cost = (h + 1) - task.arrival_interval;
        completed_time_costs_.push_back(time_cost);
        tally.trip_distance += grid_distance(task.origin, task.destination);
        tally.time_cost += time_cost;
        tally.energy += task_energy_[id];
        ++info.completions;
        ++accounting_.completed;
      }
      update_busy(p, h + 1);
    }

    // Cancellation precedes expiry; both apply only to never-assigned tasks.
    std::erase_if(pending_, [&](const Task& t) {
      if (hash_unit(cancel_seed_, static_cast<std::uint64_t>(t.id), static_cast<std::uint64_t>(h)) >= config_.cancel_prob) {
        return false;
      }
      set_status(tasks_[static_cast<std::size_t>(t.id)], TaskStatus::kCancelled);
      events_.push_back({h + 1, EventType::kCancel, t.id, -1, t.origin});
      ++info.cancellations;
      ++accounting_.cancelled;
      return true;
    });
    std::erase_if(pending_, [&](const Task& t) {
      if ((h + 1) - t.arrival_interval <= t.time_limit) return false;
      set_status(tasks_[static_cast<std::size_t>(t.id)], TaskStatus::kExpired);
      events_.push_back({h + 1, EventType::kExpire, t.id, -1, t.origin});
      ++info.expirations;
      ++accounting_.expired;
      return true;
    });

    interval_ = h + 1;
    done_ = interval_ >= config_.intervals_per_episode;
    if (!done_) info.arrivals = generate_tasks(interval_);

    dispersion_ = fairness_dispersion(participants_, completed_time_costs_);
    tally.dispersion_after = dispersion_;

    Transition tr;
    tr.breakdown = compute_components(tally, norm_);
    tr.reward = combine(tr.breakdown, config_.weights);
    tr.done = done_;
    tr.info = info;
    tr.observation = observe();
    return tr;
  }

  /// Feature rows: see kTaskFeatureWidth / kParticipantFeatureWidth layouts in README.
  Observation observe() const {
    Observation obs;
    obs.interval = interval_;
    const double s = config_.intervals_per_episode;
    const double speed_norm = grid_.max_effective_speed();
    obs.task_features = FeatureMatrix(static_cast<std::size_t>(task_rows_), kTaskFeatureWidth);
    obs.participant_features = FeatureMatrix(participants_.size(), kParticipantFeatureWidth);
    obs.task_ids.reserve(pending_.size());
    for (std::size_t i = 0; i < pending_.size() && i < obs.task_features.rows; ++i) {
      const Task& t = pending_[i];
      auto row = obs.task_features.row(i);
      row[0] = t.origin.x;
      row[1] = t.origin.y;
      row[2] = t.destination.x;
      row[3] = t.destination.y;
      row[4] = (interval_ - t.arrival_interval) / s;
      row[5] = t.fare / norm_.fare_scale;
      row[6] = t.time_limit / s;
      row[7] = t.required_participants;
      row[8] = grid_.effective_speed(t.origin, interval_) / speed_norm;
      obs.task_features.mask[i] = 1;
      obs.task_ids.push_back(t.id);
    }
    obs.participant_ids.reserve(participants_.size());
    for (std::size_t i = 0; i < participants_.size(); ++i) {
      const Participant& p = participants_[i];
      auto row = obs.participant_features.row(i);
      row[0] = p.position.x;
      row[1] = p.position.y;
      row[2] = p.available() ? 1.0 : 0.0;
      row[3] = static_cast<double>(p.queue.size()) / s;
      row[4] = p.busy_until ? (*p.busy_until - interval_) / s : 0.0;
      row[5] = p.cum_tasks_completed / s;
      row[6] = p.cum_incentive / (norm_.fare_scale * s);
      row[7] = grid_.effective_speed(p.position, interval_) / speed_norm;
      obs.participant_features.mask[i] = 1;
      obs.participant_ids.push_back(p.id);
    }
    return obs;
  }

  StateView view() const {
    return {interval_, config_.intervals_per_episode, pending_, participants_, &grid_};
  }

  int interval() const { return interval_; }
  bool done() const { return done_; }
  const SimConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const GridMap& grid() const { return grid_; }
  const NormalizationConstants& normalization() const { return norm_; }
  std::span<const Task> tasks() const { return tasks_; }
  std::span<const Task> pending() const { return pending_; }
  std::span<const Participant> participants() const { return participants_; }
  std::span<const Event> events() const { return events_; }
  std::span<const double> completed_time_costs() const { return completed_time_costs_; }
  double dispersion() const { return dispersion_; }

  TaskAccounting accounting() const {
    TaskAccounting a = accounting_;
    a.generated = static_cast<int>(tasks_.size());
    a.pending = static_cast<int>(pending_.size());
    a.in_service = 0;
    for (const Task& t : tasks_) {
      if (t.status == TaskStatus::kAssigned || t.status == TaskStatus::kInService) ++a.in_service;
    }
    return a;
  }

 private:
  Observation start(const SimConfig& config, std::uint64_t seed, GridMap grid, Generator gen, int task_rows) {
    config_ = config;
    config_.seed = seed;
    seed_ = seed;
    grid_ = std::move(grid);
    norm_ = config_.normalization(grid_.width(), grid_.height(), grid_.max_effective_speed());
    energy_ = config_.energy_model();
    cancel_seed_ = mix64(seed ^ 0x63616e63656cULL);
    gen_rng_ = Rng(mix64(seed ^ 0x67656eULL));
    generator_ = std::move(gen);
    task_rows_ = task_rows;
    tasks_.clear();
    pending_.clear();
    task_energy_.clear();
    parties_left_.clear();
    completed_time_costs_.clear();
    events_.clear();
    accounting_ = {};
    dispersion_ = 0.0;
    interval_ = 0;
    done_ = false;
    participants_ = generator_.sample_participants(gen_rng_, config_.num_participants);
    generate_tasks(0);
    return observe();
  }

  int generate_tasks(int h) {
    auto fresh = generator_.sample_tasks(h, gen_rng_, config_.max_tasks_per_interval);
    for (Task& t : fresh) {
      events_.push_back({h, EventType::kArrive, t.id, -1, t.origin});
      tasks_.push_back(t);
      pending_.push_back(t);
      task_energy_.push_back(0.0);
      parties_left_.push_back(0);
    }
    return static_cast<int>(fresh.size());
  }

  void set_status(Task& task, TaskStatus to) {
    // Lifecycle edges are enforced here; an illegal edge is an engine bug.
    if (!is_legal_transition(task.status, to)) {
      throw std::logic_error("illegal task transition " + std::string(to_string(task.status)) + " -> " +
                             std::string(to_string(to)));
    }
    task.status = to;
  }

  void update_busy(Participant& p, int now) const {
    if (p.queue.empty()) {
      p.busy_until.reset();
      return;
    }
    const double left = std::max(0.0, remaining_path(p, tasks_) - p.carry);
    p.busy_until = now + static_cast<int>(std::ceil(left / grid_.effective_speed(p.position, now)));
  }

  SimConfig config_;
  std::uint64_t seed_ = 0;
  GridMap grid_;
  NormalizationConstants norm_;
  EnergyModel energy_;
  std::uint64_t cancel_seed_ = 0;
  Rng gen_rng_;
  Generator generator_ = Generator::synthetic(SimConfig{}, GridMap{});
  int task_rows_ = 0;

  std::vector<Task> tasks_;    // indexed by id
  std::vector<Task> pending_;  // never-assigned, arrival order
  std::vector<Participant> participants_;
  std::vector<double> task_energy_;
  std::vector<int> parties_left_;
  std::vector<double> completed_time_costs_;
  std::vector<Event> events_;
  TaskAccounting accounting_;
  double dispersion_ = 0.0;
  int interval_ = 0;
  bool done_ = true;

  AdvanceEffects effects_;
};

}  // namespace mcs

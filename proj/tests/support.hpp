#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mcs/mcs.hpp"

namespace mcs::test {

inline Task make_task(GridCoord origin, GridCoord destination, int time_limit = 100, double fare = 1.0,
                      int required = 1) {
  Task t;
  t.origin = origin;
  t.destination = destination;
  t.time_limit = time_limit;
  t.fare = fare;
  t.required_participants = required;
  return t;
}

/// Config for scripted instances: no cancellation, no weather.
inline SimConfig scripted_config(int s) {
  SimConfig c;
  c.intervals_per_episode = s;
  c.max_tasks_per_interval = 1;
  c.cancel_prob = 0.0;
  c.weather_amplitude = 0.0;
  return c;
}

/// Random small configuration for property tests.
inline SimConfig random_config(Rng& rng) {
  SimConfig c;
  c.intervals_per_episode = static_cast<int>(rng.uniform_int(1, 8));
  c.max_tasks_per_interval = static_cast<int>(rng.uniform_int(1, 6));
  c.num_participants = static_cast<int>(rng.uniform_int(1, 12));
  c.grid_width = static_cast<int>(rng.uniform_int(1, 12));
  c.grid_height = static_cast<int>(rng.uniform_int(1, 12));
  c.speed_min = rng.uniform(0.3, 1.5);
  c.speed_max = c.speed_min + rng.uniform(0.0, 3.0);
  c.weather_amplitude = rng.uniform(0.0, 0.9);
  c.weather_period = static_cast<int>(rng.uniform_int(1, 30));
  c.cancel_prob = rng.uniform(0.0, 0.5);
  c.required_participants = static_cast<int>(rng.uniform_int(1, 2));
  c.energy_e1 = rng.uniform(0.0, 0.5);
  const auto& name = kPresetNames[static_cast<std::size_t>(rng.uniform_int(0, 3))];
  apply_config_entry(c, "reward", name);
  return c;
}

/// Random view over `tasks`/`participants` storage owned by the caller.
struct RandomState {
  std::vector<Task> tasks;
  std::vector<Participant> participants;
  GridMap grid;

  StateView view() const { return {0, 1, tasks, participants, &grid}; }
};

inline RandomState random_state(Rng& rng, bool all_available, bool equal_counts) {
  RandomState st;
  const int w = static_cast<int>(rng.uniform_int(1, 10));
  const int h = static_cast<int>(rng.uniform_int(1, 10));
  st.grid = GridMap::uniform(w, h, 1.0);
  auto cell = [&] { return GridCoord{static_cast<int>(rng.uniform_int(0, w - 1)), static_cast<int>(rng.uniform_int(0, h - 1))}; };
  const int n_tasks = static_cast<int>(rng.uniform_int(0, 8));
  const int n_part = static_cast<int>(rng.uniform_int(0, 8));
  for (int i = 0; i < n_tasks; ++i) {
    Task t = make_task(cell(), cell(), 10, 1.0, static_cast<int>(rng.uniform_int(1, 2)));
    t.id = i;
    st.tasks.push_back(t);
  }
  for (int i = 0; i < n_part; ++i) {
    Participant p;
    p.id = i;
    p.position = cell();
    if (!equal_counts) p.cum_tasks_assigned = static_cast<int>(rng.uniform_int(0, 4));
    if (!all_available && rng.uniform01() < 0.4) {
      p.queue.push_back(0);
      p.busy_until = 3;
    }
    st.participants.push_back(p);
  }
  return st;
}

inline std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "mcs_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace mcs::test

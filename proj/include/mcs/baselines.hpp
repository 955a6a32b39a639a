#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/rng.hpp"
#include "mcs/simulator.hpp"

namespace mcs {

namespace detail {

/// Shared skeleton of the greedy heuristics: tasks in arrival order, each takes the
/// `required_participants` best eligible, not-yet-taken participants under `key`
/// (lexicographic, smaller is better). Too few candidates leaves the task unserved.
template <class Eligible, class Key>
Action greedy_assign(const StateView& view, Eligible eligible, Key key) {
  Action action;
  std::vector<std::uint8_t> taken(view.participants.size(), 0);
  std::vector<const Participant*> candidates;
  for (const Task& task : view.pending) {
    candidates.clear();
    for (const Participant& p : view.participants) {
      if (!taken[static_cast<std::size_t>(p.id)] && eligible(p, task)) candidates.push_back(&p);
    }
    const auto need = static_cast<std::size_t>(task.required_participants);
    if (candidates.size() < need) continue;
    auto by_key = [&](const Participant* a, const Participant* b) { return key(*a, task) < key(*b, task); };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(need), candidates.end(), by_key);
    Assignment a{task.id, {}};
    for (std::size_t i = 0; i < need; ++i) {
      a.participant_ids.push_back(candidates[i]->id);
      taken[static_cast<std::size_t>(candidates[i]->id)] = 1;
    }
    action.assignments.push_back(std::move(a));
  }
  return action;
}

}  // namespace detail

/// Nearest participant first, regardless of availability; ties by lowest id.
inline Action npf_select(const StateView& view) {
  return detail::greedy_assign(
      view, [](const Participant&, const Task&) { return true; },
      [](const Participant& p, const Task& t) { return std::pair{grid_distance(p.position, t.origin), p.id}; });
}

/// Nearest currently available participant first.
inline Action napf_select(const StateView& view) {
  return detail::greedy_assign(
      view, [](const Participant& p, const Task&) { return p.available(); },
      [](const Participant& p, const Task& t) { return std::pair{grid_distance(p.position, t.origin), p.id}; });
}

/// Worst-off participant first: among available participants within `radius` cells of
/// the origin, the one with the fewest lifetime assignments; ties by distance, then id.
inline Action wpf_select(const StateView& view, double radius) {
  return detail::greedy_assign(
      view,
      [radius](const Participant& p, const Task& t) {
        return p.available() && grid_distance(p.position, t.origin) <= radius;
      },
      [](const Participant& p, const Task& t) {
        return std::tuple{p.cum_tasks_assigned, grid_distance(p.position, t.origin), p.id};
      });
}

/// Per task, uniform over {each untaken participant, unserved}.
inline Action random_select(const StateView& view, Rng& rng) {
  Action action;
  std::vector<std::uint8_t> taken(view.participants.size(), 0);
  std::vector<int> candidates;
  for (const Task& task : view.pending) {
    candidates.clear();
    for (const Participant& p : view.participants) {
      if (!taken[static_cast<std::size_t>(p.id)]) candidates.push_back(p.id);
    }
    const auto n = static_cast<std::int64_t>(candidates.size());
    const auto pick = rng.uniform_int(0, n);
    const auto need = static_cast<std::size_t>(task.required_participants);
    if (pick == n || candidates.size() < need) continue;
    std::swap(candidates[0], candidates[static_cast<std::size_t>(pick)]);
    for (std::size_t i = 1; i < need; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), n - 1));
      std::swap(candidates[i], candidates[j]);
    }
    Assignment a{task.id, {candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(need)}};
    for (int pid : a.participant_ids) taken[static_cast<std::size_t>(pid)] = 1;
    action.assignments.push_back(std::move(a));
  }
  return action;
}

using Policy = std::function<Action(const StateView&)>;

inline constexpr std::string_view kHeuristicNames[] = {"npf", "napf", "wpf", "random"};

/// Builds a stateless heuristic (random carries its own generator seeded from `seed`).
inline Policy make_heuristic(std::string_view name, const SimConfig& config, std::uint64_t seed) {
  if (name == "npf") return npf_select;
  if (name == "napf") return napf_select;
  if (name == "wpf") {
    const double radius = config.resolved_wpf_radius();
    return [radius](const StateView& v) { return wpf_select(v, radius); };
  }
  if (name == "random") {
    return [rng = Rng(mix64(seed ^ 0x72616e646f6dULL))](const StateView& v) mutable { return random_select(v, rng); };
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown policy '" + std::string(name) + "'");
}

/// Every executable action in lexicographic order: tasks in arrival order, and per task
/// the participant subsets in ascending id order followed by "unserved".
inline std::vector<Action> enumerate_actions(const StateView& view) {
  std::vector<Action> out;
  std::vector<std::uint8_t> taken(view.participants.size(), 0);
  Action current;
  std::vector<int> party;
  std::function<void(std::size_t)> per_task;
  std::function<void(std::size_t, std::size_t, int)> choose;

  choose = [&](std::size_t task_index, std::size_t need, int from) {
    if (party.size() == need) {
      current.assignments.push_back({view.pending[task_index].id, party});
      for (int id : party) taken[static_cast<std::size_t>(id)] = 1;
      std::vector<int> saved;
      saved.swap(party);
      per_task(task_index + 1);
      party.swap(saved);
      for (int id : party) taken[static_cast<std::size_t>(id)] = 0;
      current.assignments.pop_back();
      return;
    }
    for (int id = from; id < static_cast<int>(view.participants.size()); ++id) {
      if (taken[static_cast<std::size_t>(id)]) continue;
      party.push_back(id);
      choose(task_index, need, id + 1);
      party.pop_back();
    }
  };
  per_task = [&](std::size_t task_index) {
    if (task_index == view.pending.size()) {
      out.push_back(current);
      return;
    }
    choose(task_index, static_cast<std::size_t>(view.pending[task_index].required_participants), 0);
    per_task(task_index + 1);
  };
  per_task(0);
  return out;
}

struct OracleResult {
  std::vector<Action> actions;
  double value = 0.0;
  std::size_t root_actions = 0;
  std::size_t leaves = 0;
  double bound = 0.0;
};

inline constexpr double kOracleSearchLimit = 1e6;

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double oracle_search(const Simulator& sim, int depth, std::vector<Action>& best_seq, OracleResult& stats,
                            bool root) {
  if (depth == 0 || sim.done()) {
    ++stats.leaves;
    best_seq.clear();
    return 0.0;
  }
  const auto actions = enumerate_actions(sim.view());
  if (root) stats.root_actions = actions.size();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Action> tail;
  for (const Action& a : actions) {
    Simulator next = sim;
    const double r = next.step(a).reward;
    const double value = r + oracle_search(next, depth - 1, tail, stats, false);
    if (value > best + 1e-12) {
      best = value;
      best_seq.clear();
      best_seq.push_back(a);
      best_seq.insert(best_seq.end(), tail.begin(), tail.end());
    }
  }
  return best;
}

}  // namespace detail

/// Upper bound on leaves of the exhaustive search from `sim` over `horizon` steps,
/// accounting for pending tasks carried over between intervals.
inline double oracle_search_bound(const Simulator& sim, int horizon) {
  const auto& c = sim.config();
  int k = c.required_participants;
  for (const Task& t : sim.pending()) k = std::max(k, t.required_participants);
  const int p = static_cast<int>(sim.participants().size());
  double options = 0.0;
  for (int j = 1; j <= k; ++j) options = std::max(options, detail::binomial(p, j));
  const double base = options + 1.0;
  double log_bound = 0.0;
  const auto pending0 = static_cast<double>(sim.pending().size());
  for (int i = 0; i < horizon; ++i) log_bound += (pending0 + static_cast<double>(c.max_tasks_per_interval) * i) * std::log(base);
  return std::exp(log_bound);
}

/// Exhaustive search over action sequences from the current state. Environment
/// dynamics are action-independent in their randomness (generation draws from a
/// dedicated stream, cancellations are keyed hashes), so every branch is deterministic.
inline OracleResult brute_force_optimal(const Simulator& start, int horizon = -1) {
  const int remaining = start.config().intervals_per_episode - start.interval();
  if (horizon < 0 || horizon > remaining) horizon = remaining;
  OracleResult result;
  result.bound = oracle_search_bound(start, horizon);
  if (result.bound > kOracleSearchLimit) {
    throw Error(ErrorCode::kSearchTooLarge, "search bound " + detail::format_double(result.bound) + " exceeds 1e6");
  }
  result.value = detail::oracle_search(start, horizon, result.actions, result, true);
  return result;
}

inline OracleResult brute_force_optimal(const SimConfig& config, std::uint64_t seed, int horizon = -1) {
  Simulator sim;
  sim.reset(config, seed);
  return brute_force_optimal(sim, horizon);
}

}  // namespace mcs

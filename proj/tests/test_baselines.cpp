#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace mcs;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kProtocol;
}

struct Fixture {
  std::vector<Task> tasks;
  std::vector<Participant> people;
  GridMap grid = GridMap::uniform(10, 10, 1.0);

  void task(GridCoord origin) {
    Task t = test::make_task(origin, origin);
    t.id = static_cast<int>(tasks.size());
    tasks.push_back(t);
  }
  Participant& person(GridCoord at, int assigned = 0, bool busy = false) {
    Participant p;
    p.id = static_cast<int>(people.size());
    p.position = at;
    p.cum_tasks_assigned = assigned;
    if (busy) p.queue.push_back(99);
    people.push_back(p);
    return people.back();
  }
  StateView view() const { return {0, 1, tasks, people, &grid}; }
};

Action single(int task, int participant) { return Action{{{task, {participant}}}}; }

// Number of executable actions, counted independently: per task, either unserved or
// one of the C(free, k) parties, recursing over the remaining free participants.
double count_actions(const std::vector<int>& required, std::size_t i, int free) {
  if (i == required.size()) return 1.0;
  double total = count_actions(required, i + 1, free);
  const int k = required[i];
  if (k <= free) {
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * (free - k + j) / j;
    total += c * count_actions(required, i + 1, free - k);
  }
  return total;
}

double episode_value(const SimConfig& c, std::uint64_t seed, const Policy& policy) {
  Simulator sim;
  sim.reset(c, seed);
  double total = 0.0;
  while (!sim.done()) total += sim.step(policy(sim.view())).reward;
  return total;
}

}  // namespace

TEST(Npf, NearestWinsAndTiesGoToLowestId) {
  Fixture f;
  f.task({0, 0});
  f.person({5, 0});
  f.person({1, 0});
  EXPECT_EQ(npf_select(f.view()), single(0, 1));
  Fixture g;
  g.task({2, 2});
  g.person({3, 2});
  g.person({2, 1});
  EXPECT_EQ(npf_select(g.view()), single(0, 0));
}

TEST(Npf, SupplyExhaustionLeavesLaterTasks) {
  Fixture f;
  f.task({0, 0});
  f.task({9, 9});
  f.person({9, 9});
  EXPECT_EQ(npf_select(f.view()), single(0, 0));
}

TEST(Npf, IgnoresAvailability) {
  Fixture f;
  f.task({0, 0});
  f.person({0, 1}, 0, true);
  f.person({0, 3});
  EXPECT_EQ(npf_select(f.view()), single(0, 0));
}

TEST(Napf, SkipsBusyParticipants) {
  Fixture f;
  f.task({0, 0});
  f.person({0, 1}, 0, true);
  f.person({0, 3});
  EXPECT_EQ(napf_select(f.view()), single(0, 1));
}

TEST(Napf, AllBusyGivesEmptyAction) {
  Fixture f;
  f.task({0, 0});
  f.person({0, 1}, 0, true);
  f.person({0, 3}, 0, true);
  EXPECT_EQ(napf_select(f.view()), Action{});
}

TEST(Wpf, FewestAssignmentsThenDistanceThenId) {
  Fixture f;
  f.task({0, 0});
  f.person({1, 0}, 3);
  f.person({2, 0}, 1);
  EXPECT_EQ(wpf_select(f.view(), 5), single(0, 1));
  Fixture g;
  g.task({0, 0});
  g.person({0, 4}, 2);
  g.person({2, 0}, 2);
  EXPECT_EQ(wpf_select(g.view(), 5), single(0, 1));
}

TEST(Wpf, OutOfRadiusIsUnserved) {
  Fixture f;
  f.task({0, 0});
  f.person({4, 4});
  EXPECT_EQ(wpf_select(f.view(), 3), Action{});
  EXPECT_EQ(wpf_select(f.view(), 8), single(0, 0));
}

TEST(Random, ZeroParticipantsAndReproducibility) {
  Fixture f;
  f.task({0, 0});
  Rng rng(1);
  EXPECT_EQ(random_select(f.view(), rng), Action{});
  Rng rng_a(5);
  Rng rng_b(5);
  Rng draw(7);
  for (int i = 0; i < 100; ++i) {
    const auto st = test::random_state(draw, false, false);
    ASSERT_EQ(random_select(st.view(), rng_a), random_select(st.view(), rng_b));
  }
}

TEST(Random, ServeRateIsOneHalfWithOneCandidate) {
  Fixture f;
  f.task({0, 0});
  f.person({1, 1});
  Rng rng(2024);
  int served = 0;
  for (int i = 0; i < 10000; ++i) served += random_select(f.view(), rng).assignments.empty() ? 0 : 1;
  EXPECT_NEAR(served / 10000.0, 0.5, 0.02);
}

TEST(Heuristics, Equivalences) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto st = test::random_state(rng, true, false);
    ASSERT_EQ(npf_select(st.view()), napf_select(st.view()));
  }
  for (int i = 0; i < 1000; ++i) {
    const auto st = test::random_state(rng, false, true);
    ASSERT_EQ(wpf_select(st.view(), std::numeric_limits<double>::infinity()), napf_select(st.view()));
  }
}

TEST(Heuristics, OutputsAlwaysValidate) {
  Rng rng(123);
  Rng pick(321);
  for (int i = 0; i < 10000; ++i) {
    const auto st = test::random_state(rng, i % 2 == 0, i % 3 == 0);
    const auto v = st.view();
    ASSERT_FALSE(validate_action(npf_select(v), st.tasks, st.participants));
    ASSERT_FALSE(validate_action(napf_select(v), st.tasks, st.participants));
    ASSERT_FALSE(validate_action(wpf_select(v, rng.uniform(0, 10)), st.tasks, st.participants));
    ASSERT_FALSE(validate_action(random_select(v, pick), st.tasks, st.participants));
  }
}

TEST(Enumerate, CountsMatchIndependentFormulaAndAllValidate) {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    auto st = test::random_state(rng, true, true);
    if (st.tasks.size() > 4) st.tasks.resize(4);
    if (st.participants.size() > 5) st.participants.resize(5);
    const auto actions = enumerate_actions(st.view());
    std::vector<int> req;
    for (const Task& t : st.tasks) req.push_back(t.required_participants);
    ASSERT_EQ(static_cast<double>(actions.size()), count_actions(req, 0, static_cast<int>(st.participants.size())));
    std::set<std::vector<std::pair<int, std::vector<int>>>> distinct;
    for (const Action& a : actions) {
      ASSERT_FALSE(validate_action(a, st.tasks, st.participants));
      std::vector<std::pair<int, std::vector<int>>> key;
      for (const auto& as : a.assignments) key.emplace_back(as.task_id, as.participant_ids);
      distinct.insert(key);
    }
    ASSERT_EQ(distinct.size(), actions.size());
  }
}

TEST(Oracle, AtomTask) {
  // One task, two free participants at distances 1 and 5, and speed high enough that
  // either could finish within the single interval.
  SimConfig c = test::scripted_config(1);
  apply_config_entry(c, "w_time", "0");
  apply_config_entry(c, "w_fairness", "0");
  apply_config_entry(c, "w_energy", "0");
  Scenario sc{GridMap::uniform(10, 1, 20.0), {{1, 0}, {5, 0}}, {{test::make_task({0, 0}, {4, 0})}}};
  Simulator sim;
  sim.reset(c, sc);
  const auto result = brute_force_optimal(sim);
  EXPECT_EQ(result.root_actions, 3u);
  ASSERT_EQ(result.actions.size(), 1u);
  EXPECT_EQ(result.actions[0], npf_select(sim.view()));
  EXPECT_EQ(result.actions[0], single(0, 0));
  Simulator replay = sim;
  EXPECT_EQ(replay.step(result.actions[0]).reward, result.value);
  EXPECT_DOUBLE_EQ(result.value, (4.0 - 1.0) / 11.0);
}

TEST(Oracle, DominatesHeuristicsOnSmallInstances) {
  Rng rng(2718);
  int strict = 0;
  for (int i = 0; i < 50; ++i) {
    SimConfig c;
    c.intervals_per_episode = static_cast<int>(rng.uniform_int(1, 2));
    c.max_tasks_per_interval = static_cast<int>(rng.uniform_int(1, 2));
    c.num_participants = static_cast<int>(rng.uniform_int(1, 4));
    c.grid_width = static_cast<int>(rng.uniform_int(2, 5));
    c.grid_height = static_cast<int>(rng.uniform_int(2, 5));
    c.speed_min = 1.0;
    c.speed_max = 4.0;
    c.cancel_prob = 0.0;
    apply_config_entry(c, "reward", kPresetNames[static_cast<std::size_t>(rng.uniform_int(0, 3))]);
    const auto seed = rng.next();
    const auto best = brute_force_optimal(c, seed);
    Simulator replay;
    replay.reset(c, seed);
    double replayed = 0.0;
    for (const Action& a : best.actions) replayed += replay.step(a).reward;
    ASSERT_NEAR(replayed, best.value, 1e-12);
    double best_heuristic = -std::numeric_limits<double>::infinity();
    for (auto name : kHeuristicNames) {
      const double v = episode_value(c, seed, make_heuristic(name, c, seed));
      ASSERT_GE(best.value, v - 1e-12) << name;
      best_heuristic = std::max(best_heuristic, v);
    }
    if (best.value > best_heuristic + 1e-9) ++strict;
  }
  EXPECT_GE(strict, 1);
}

TEST(Oracle, RefusesLargeSearches) {
  SimConfig c;
  c.intervals_per_episode = 5;
  c.max_tasks_per_interval = 5;
  c.num_participants = 10;
  EXPECT_EQ(code_of([&] { brute_force_optimal(c, 1); }), ErrorCode::kSearchTooLarge);
}

TEST(Oracle, BoundAllowsTheSpecifiedEnvelope) {
  SimConfig c;
  c.intervals_per_episode = 2;
  c.max_tasks_per_interval = 2;
  c.num_participants = 4;
  c.min_tasks_per_interval = 2;
  Simulator sim;
  sim.reset(c, 3);
  EXPECT_LE(oracle_search_bound(sim, 2), kOracleSearchLimit);
}

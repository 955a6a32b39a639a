#include <gtest/gtest.h>

#include <deque>

#include "support.hpp"

using namespace mcs;

namespace {

// Shortest 4-neighbour path on an obstacle-free grid, by breadth-first search.
int bfs_distance(int w, int h, GridCoord a, GridCoord b) {
  std::vector<int> dist(static_cast<std::size_t>(w * h), -1);
  std::deque<GridCoord> q{a};
  dist[static_cast<std::size_t>(a.y * w + a.x)] = 0;
  const int dx[] = {1, -1, 0, 0};
  const int dy[] = {0, 0, 1, -1};
  while (!q.empty()) {
    const GridCoord c = q.front();
    q.pop_front();
    if (c == b) return dist[static_cast<std::size_t>(c.y * w + c.x)];
    for (int k = 0; k < 4; ++k) {
      const GridCoord n{c.x + dx[k], c.y + dy[k]};
      if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
      auto& d = dist[static_cast<std::size_t>(n.y * w + n.x)];
      if (d >= 0) continue;
      d = dist[static_cast<std::size_t>(c.y * w + c.x)] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

std::vector<Task> pending_tasks(int n) {
  std::vector<Task> out;
  for (int i = 0; i < n; ++i) {
    Task t = test::make_task({0, 0}, {1, 1});
    t.id = i;
    out.push_back(t);
  }
  return out;
}

std::vector<Participant> roster(int n) {
  std::vector<Participant> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].id = i;
  return out;
}

}  // namespace

TEST(GridDistance, Examples) {
  EXPECT_EQ(grid_distance({0, 0}, {0, 0}), 0);
  EXPECT_EQ(grid_distance({0, 0}, {3, 4}), 7);
}

TEST(GridDistance, MatchesBfsOnSmallGrids) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int w = static_cast<int>(rng.uniform_int(1, 9));
    const int h = static_cast<int>(rng.uniform_int(1, 9));
    const GridCoord a{static_cast<int>(rng.uniform_int(0, w - 1)), static_cast<int>(rng.uniform_int(0, h - 1))};
    const GridCoord b{static_cast<int>(rng.uniform_int(0, w - 1)), static_cast<int>(rng.uniform_int(0, h - 1))};
    ASSERT_EQ(grid_distance(a, b), bfs_distance(w, h, a, b));
  }
}

TEST(GridDistance, IsAMetric) {
  Rng rng(12);
  auto cell = [&] { return GridCoord{static_cast<int>(rng.uniform_int(0, 99)), static_cast<int>(rng.uniform_int(0, 99))}; };
  for (int i = 0; i < 10000; ++i) {
    const GridCoord a = cell(), b = cell(), c = cell();
    ASSERT_EQ(grid_distance(a, a), 0);
    ASSERT_EQ(grid_distance(a, b), grid_distance(b, a));
    ASSERT_LE(grid_distance(a, c), grid_distance(a, b) + grid_distance(b, c));
  }
}

TEST(GridMap, EffectiveSpeedFollowsWeather) {
  const GridMap g = GridMap::uniform(3, 2, 2.0, 0.5, 4);
  EXPECT_DOUBLE_EQ(g.effective_speed({0, 0}, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.effective_speed({2, 1}, 1), 3.0);
  EXPECT_NEAR(g.effective_speed({1, 1}, 3), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.max_effective_speed(), 3.0);
  for (int h = 0; h < 50; ++h) EXPECT_GT(g.effective_speed({1, 0}, h), 0.0);
}

TEST(GridMap, RejectsInvalidParameters) {
  EXPECT_THROW(GridMap::uniform(0, 3, 1.0), Error);
  EXPECT_THROW(GridMap::uniform(3, 3, 0.0), Error);
  EXPECT_THROW(GridMap::uniform(3, 3, 1.0, 1.0), Error);
  EXPECT_THROW(GridMap::uniform(3, 3, 1.0, 0.2, 0), Error);
  EXPECT_THROW(GridMap(2, 2, {1.0, 1.0}, 0.0, 1), Error);
}

TEST(TaskStatus, OnlyLifecycleEdgesAreLegal) {
  using S = TaskStatus;
  const S all[] = {S::kPending, S::kAssigned, S::kInService, S::kCompleted, S::kCancelled, S::kExpired};
  const std::pair<S, S> legal[] = {{S::kPending, S::kAssigned},   {S::kAssigned, S::kInService},
                                   {S::kInService, S::kCompleted}, {S::kPending, S::kCancelled},
                                   {S::kPending, S::kExpired}};
  for (S from : all) {
    for (S to : all) {
      const bool expected = std::find(std::begin(legal), std::end(legal), std::pair{from, to}) != std::end(legal);
      EXPECT_EQ(is_legal_transition(from, to), expected) << to_string(from) << " -> " << to_string(to);
    }
  }
}

TEST(ValidateAction, DuplicateParticipantAcrossTasks) {
  auto tasks = pending_tasks(3);
  auto people = roster(8);
  Action a{{{1, {7}}, {2, {7}}}};
  const auto v = validate_action(a, tasks, people);
  ASSERT_TRUE(v);
  EXPECT_EQ(v->kind, ViolationKind::kDuplicateParticipant);
  EXPECT_EQ(v->task_id, 2);
  EXPECT_EQ(v->participant_id, 7);
}

TEST(ValidateAction, EmptyActionIsLegal) {
  auto tasks = pending_tasks(2);
  auto people = roster(3);
  EXPECT_FALSE(validate_action(Action{}, tasks, people));
}

TEST(ValidateAction, DisjointSingletonsAreLegal) {
  auto tasks = pending_tasks(2);
  auto people = roster(3);
  EXPECT_FALSE(validate_action(Action{{{0, {2}}, {1, {0}}}}, tasks, people));
}

TEST(ValidateAction, ReportsEachViolationKind) {
  auto tasks = pending_tasks(2);
  tasks[1].required_participants = 2;
  auto people = roster(3);
  EXPECT_EQ(validate_action(Action{{{5, {0}}}}, tasks, people)->kind, ViolationKind::kUnknownTask);
  EXPECT_EQ(validate_action(Action{{{0, {3}}}}, tasks, people)->kind, ViolationKind::kUnknownParticipant);
  EXPECT_EQ(validate_action(Action{{{0, {-1}}}}, tasks, people)->kind, ViolationKind::kUnknownParticipant);
  EXPECT_EQ(validate_action(Action{{{1, {0}}}}, tasks, people)->kind, ViolationKind::kWrongPartySize);
  EXPECT_EQ(validate_action(Action{{{0, {}}}}, tasks, people)->kind, ViolationKind::kWrongPartySize);
  EXPECT_EQ(validate_action(Action{{{1, {1, 1}}}}, tasks, people)->kind, ViolationKind::kDuplicateParticipant);
  EXPECT_EQ(validate_action(Action{{{0, {0}}, {0, {1}}}}, tasks, people)->kind, ViolationKind::kDuplicateTask);
  EXPECT_FALSE(validate_action(Action{{{1, {2, 0}}}}, tasks, people));
}

TEST(ValidateAction, DescribeNamesIds) {
  const Violation v{ViolationKind::kDuplicateParticipant, 2, 7};
  EXPECT_EQ(v.describe(), "DUPLICATE_PARTICIPANT task=2 participant=7");
}

TEST(RewardWeights, Validity) {
  EXPECT_TRUE(RewardWeights{}.valid());
  EXPECT_FALSE((RewardWeights{0, 0, 0, 0, 0}.valid()));
  EXPECT_FALSE((RewardWeights{1, -1, 0, 0, 0}.valid()));
}

TEST(Participant, AvailabilityNeedsEmptyQueueAndNoBusyUntil) {
  Participant p;
  EXPECT_TRUE(p.available());
  p.busy_until = 3;
  EXPECT_FALSE(p.available());
  p.busy_until.reset();
  p.queue.push_back(1);
  EXPECT_FALSE(p.available());
}

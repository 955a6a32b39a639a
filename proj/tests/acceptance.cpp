// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is the number
// of failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

constexpr double kGoldenWallLimitSeconds = 1.0;
constexpr double kDecompositionTolerance = 1e-9;
constexpr int kDecompositionMinSteps = 1000;
constexpr double kOracleSlack = 1e-12;
constexpr double kStrictMargin = 1e-9;
constexpr double kThroughputTarget = 50000.0;
constexpr double kThroughputWindowSeconds = 1.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "mcs_acceptance";
  fs::create_directories(dir);
  return dir;
}

int shell(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome determinism_golden() {
  const fs::path dir = work_dir();
  double worst = 0.0;
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / ("golden_" + std::to_string(i) + ".csv");
    fs::remove(out);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = shell(std::string(quoted(MCS_CLI_PATH)) +
                         " run --policy npf --settings 5,5,15 --preset fairness_first --episodes 3 --seed 7 --out " +
                         quoted(out) + " 2>/dev/null");
    worst = std::max(worst, seconds_since(t0));
    if (rc != 0) return {false, "cli exited with " + std::to_string(rc)};
    files[i] = read_file(out);
  }
  const auto lines = std::count(files[0].begin(), files[0].end(), '\n');
  const bool same = !files[0].empty() && files[0] == files[1];
  return {same && lines == 4 && worst < kGoldenWallLimitSeconds,
          std::string(same ? "identical" : "different") + " files, " + std::to_string(lines) + " lines, slowest run " +
              std::to_string(worst) + " s"};
}

Outcome reward_decomposition() {
  Rng rng(9001);
  int steps = 0;
  double worst = 0.0;
  while (steps < kDecompositionMinSteps * 2) {
    SimConfig c = test::random_config(rng);
    if (rng.uniform01() < 0.5) {
      apply_config_entry(c, "w_assign_dist", detail::format_double(rng.uniform(0, 5)));
      apply_config_entry(c, "w_fairness", detail::format_double(rng.uniform(0, 5)));
    }
    Simulator sim;
    sim.reset(c, rng.next());
    Rng pick(rng.next());
    while (!sim.done()) {
      const auto tr = sim.step(random_select(sim.view(), pick));
      worst = std::max(worst, std::abs(tr.reward - weighted_sum(tr.breakdown, c.weights)));
      worst = std::max(worst, std::abs(tr.reward - tr.breakdown.total));
      ++steps;
    }
  }
  return {worst <= kDecompositionTolerance, std::to_string(steps) + " steps, max deviation " + detail::format_double(worst)};
}

double episode_value(const SimConfig& c, std::uint64_t seed, const Policy& policy) {
  Simulator sim;
  sim.reset(c, seed);
  double total = 0.0;
  while (!sim.done()) total += sim.step(policy(sim.view())).reward;
  return total;
}

Outcome oracle_dominance() {
  Rng rng(31337);
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
    double best_heuristic = -std::numeric_limits<double>::infinity();
    for (auto name : kHeuristicNames) {
      const double v = episode_value(c, seed, make_heuristic(name, c, seed));
      if (best.value < v - kOracleSlack) {
        return {false, "instance " + std::to_string(i) + ": " + std::string(name) + " beats the oracle"};
      }
      best_heuristic = std::max(best_heuristic, v);
    }
    if (best.value > best_heuristic + kStrictMargin) ++strict;
  }
  return {strict >= 1, "50 instances, strict improvement on " + std::to_string(strict)};
}

Outcome atom_task() {
  SimConfig c = test::scripted_config(1);
  apply_config_entry(c, "w_time", "0");
  apply_config_entry(c, "w_fairness", "0");
  apply_config_entry(c, "w_energy", "0");
  Scenario sc{GridMap::uniform(10, 1, 20.0), {{1, 0}, {5, 0}}, {{test::make_task({0, 0}, {4, 0})}}};
  Simulator sim;
  sim.reset(c, sc);
  const auto enumerated = enumerate_actions(sim.view()).size();
  const auto result = brute_force_optimal(sim);
  const bool match = result.actions.size() == 1 && result.actions[0] == npf_select(sim.view());
  return {enumerated == 3 && result.root_actions == 3 && match,
          std::to_string(enumerated) + " actions, oracle " + (match ? "equals" : "differs from") + " NPF"};
}

Outcome heuristic_invariants() {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto st = test::random_state(rng, true, false);
    if (npf_select(st.view()) != napf_select(st.view())) return {false, "npf differs from napf"};
  }
  for (int i = 0; i < 1000; ++i) {
    const auto st = test::random_state(rng, false, true);
    if (wpf_select(st.view(), std::numeric_limits<double>::infinity()) != napf_select(st.view())) {
      return {false, "unbounded wpf differs from napf"};
    }
  }
  Rng pick(78);
  for (int i = 0; i < 10000; ++i) {
    const auto st = test::random_state(rng, i % 2 == 0, i % 3 == 0);
    const auto v = st.view();
    for (const Action& a : {npf_select(v), napf_select(v), wpf_select(v, rng.uniform(0, 10)), random_select(v, pick)}) {
      if (validate_action(a, st.tasks, st.participants)) return {false, "invalid action on state " + std::to_string(i)};
    }
  }
  return {true, "1000 + 1000 equivalences, 10000 states validated"};
}

Outcome conservation() {
  Rng rng(2222);
  for (int e = 0; e < 200; ++e) {
    const SimConfig c = test::random_config(rng);
    Simulator sim;
    sim.reset(c, rng.next());
    auto policy = make_heuristic(kHeuristicNames[static_cast<std::size_t>(e % 4)], c, static_cast<std::uint64_t>(e));
    while (!sim.done()) {
      sim.step(policy(sim.view()));
      if (!sim.accounting().balanced()) return {false, "imbalance in episode " + std::to_string(e)};
    }
    const auto acc = sim.accounting();
    const auto arrivals = std::count_if(sim.events().begin(), sim.events().end(),
                                        [](const Event& ev) { return ev.type == EventType::kArrive; });
    if (acc.generated != arrivals) return {false, "arrival count mismatch in episode " + std::to_string(e)};
  }
  return {true, "200 episodes balanced after every step"};
}

Outcome protocol_fuzz() {
  using namespace protocol;
  Rng rng(55);
  for (int i = 0; i < 1000; ++i) {
    Action a;
    const int n = static_cast<int>(rng.uniform_int(0, 4));
    for (int j = 0; j < n; ++j) a.assignments.push_back({static_cast<int>(rng.uniform_int(0, 50)), {static_cast<int>(rng.uniform_int(0, 9))}});
    SimConfig c = test::random_config(rng);
    Simulator sim;
    Observation obs = sim.reset(c, rng.next());
    Transition tr = sim.step(napf_select(sim.view()));
    ResetMsg reset{{{"num_participants", std::to_string(rng.uniform_int(1, 9))}}, rng.next()};
    const Message msgs[] = {reset, ObservationMsg{obs}, ActMsg{a}, TransitionMsg{tr}, ErrorMsg{"PROTOCOL", "x\ty"},
                            CloseMsg{}};
    const Message& m = msgs[i % 6];
    if (decode(encode(m)) != m) return {false, "round trip failed for message " + std::to_string(i)};
  }

  Session reference, noisy;
  const std::string reset_line = encode(ResetMsg{{{"intervals_per_episode", "6"}}, 3});
  reference.handle(reset_line);
  noisy.handle(reset_line);
  Rng junk(56);
  const std::string act_text = encode(ActMsg{Action{{{0, {0}}}}});
  for (int i = 0; i < 100; ++i) {
    std::string line = act_text.substr(0, static_cast<std::size_t>(junk.uniform_int(0, static_cast<std::int64_t>(act_text.size()) - 1)));
    if (i % 4 == 0) line = "[" + std::to_string(i) + "]";
    const auto out = noisy.handle(line);
    const Message reply = out.size() == 1 ? decode(out[0]) : Message{CloseMsg{}};
    const auto* err = std::get_if<ErrorMsg>(&reply);
    if (!err || err->code != "PROTOCOL") return {false, "malformed line " + std::to_string(i) + " not rejected"};
    if (noisy.state() != Session::State::kRunning) return {false, "state changed by malformed line"};
    if (i % 20 == 19 && reference.state() == Session::State::kRunning) {
      const std::string act = encode(ActMsg{npf_select(reference.simulator().view())});
      if (noisy.handle(act) != reference.handle(act)) return {false, "session diverged after malformed input"};
    }
  }

  const fs::path dir = work_dir();
  const fs::path in_path = dir / "script.jsonl";
  const fs::path out_path = dir / "served.jsonl";
  SimConfig c;
  c.intervals_per_episode = 12;
  c.cancel_prob = 0.2;
  std::string expected;
  {
    std::ofstream script(in_path, std::ios::binary);
    Simulator sim;
    script << encode(ResetMsg{{{"intervals_per_episode", "12"}, {"cancel_prob", "0.2"}}, 99}) << '\n';
    expected += encode(ObservationMsg{sim.reset(c, 99)}) + '\n';
    while (!sim.done()) {
      const Action a = napf_select(sim.view());
      script << encode(ActMsg{a}) << '\n';
      expected += encode(TransitionMsg{sim.step(a)}) + '\n';
    }
    script << encode(CloseMsg{}) << '\n';
  }
  const int rc = shell(std::string(quoted(MCS_CLI_PATH)) + " serve --stdio < " + quoted(in_path) + " > " + quoted(out_path));
  if (rc != 0) return {false, "serve exited with " + std::to_string(rc)};
  if (read_file(out_path) != expected) return {false, "served episode differs from in-process run"};
  return {true, "1000 round trips, 100 malformed lines rejected, served episode bit-exact"};
}

Outcome throughput() {
  SimConfig c;
  c.intervals_per_episode = 10;
  c.max_tasks_per_interval = 10;
  c.num_participants = 20;
  Rng pick(1);
  long steps = 0;
  std::uint64_t seed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  double elapsed = 0.0;
  while (elapsed < kThroughputWindowSeconds) {
    Simulator sim;
    sim.reset(c, seed++);
    while (!sim.done()) {
      sim.step(random_select(sim.view(), pick));
      ++steps;
    }
    elapsed = seconds_since(t0);
  }
  const double rate = static_cast<double>(steps) / elapsed;
  return {rate >= kThroughputTarget, std::to_string(static_cast<long>(rate)) + " steps/s"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"determinism golden", determinism_golden},
      {"reward decomposition", reward_decomposition},
      {"oracle dominance", oracle_dominance},
      {"atom-task enumeration", atom_task},
      {"heuristic invariants", heuristic_invariants},
      {"conservation", conservation},
      {"protocol fuzz", protocol_fuzz},
      {"throughput", throughput},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")" << std::endl;
  }
  return failures;
}

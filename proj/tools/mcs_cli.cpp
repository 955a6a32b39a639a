#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcs/mcs.hpp"

namespace {

mcs::SimConfig base_config(const std::string& path) {
  return path.empty() ? mcs::SimConfig{} : mcs::load_config(path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mcs::Error(mcs::ErrorCode::kFileNotFound, "cannot write " + path);
  return out;
}

void print_action(std::ostream& out, const mcs::Action& a) {
  out << '[';
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    if (i) out << ", ";
    out << a.assignments[i].task_id << "->{";
    for (std::size_t j = 0; j < a.assignments[i].participant_ids.size(); ++j) {
      if (j) out << ',';
      out << a.assignments[i].participant_ids[j];
    }
    out << '}';
  }
  out << ']';
}

struct RunArgs {
  std::string config, policy = "npf", settings, preset, out = "-", endpoint;
  int episodes = 1;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

int cmd_run(const RunArgs& a) {
  mcs::RunRequest req;
  req.base = base_config(a.config);
  req.policy = a.policy;
  req.settings = a.settings.empty()
                     ? std::vector<mcs::Setting>{{req.base.intervals_per_episode, req.base.max_tasks_per_interval,
                                                  req.base.num_participants}}
                     : mcs::parse_settings(a.settings);
  if (!a.preset.empty()) req.presets = mcs::parse_presets(a.preset);
  req.episodes = a.episodes;
  req.base_seed = a.seed.value_or(req.base.seed);
  req.jobs = a.jobs;
  if (!a.endpoint.empty()) req.endpoint = mcs::net::parse_endpoint(a.endpoint);

  const auto start = std::chrono::steady_clock::now();
  const auto rows = mcs::run_episodes(req);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (a.out == "-") {
    mcs::write_results_csv(std::cout, rows, a.timing);
  } else {
    auto out = open_out(a.out);
    mcs::write_results_csv(out, rows, a.timing);
  }
  for (const auto& s : mcs::summarize(rows)) {
    std::cerr << s.policy << ' ' << s.preset << " (" << s.setting.s << ',' << s.setting.t << ',' << s.setting.p
              << "): mean " << mcs::fixed(s.mean, 4) << " sd " << mcs::fixed(s.stddev, 4) << " over " << s.episodes
              << " episodes";
    if (s.failed) std::cerr << ", " << s.failed << " failed";
    std::cerr << '\n';
  }
  std::cerr << rows.size() << " episodes in " << mcs::fixed(ms, 1) << " ms\n";
  return 0;
}

int cmd_serve(const std::string& config, bool stdio, const std::string& listen, int max_connections) {
  const auto base = base_config(config);
  if (stdio || listen.empty()) {
    mcs::protocol::serve_stream(std::cin, std::cout, base);
    return 0;
  }
  mcs::net::TcpListener listener(mcs::net::parse_endpoint(listen));
  std::cerr << "listening on port " << listener.port() << std::endl;
  mcs::net::serve_tcp(listener, base, max_connections);
  return 0;
}

int cmd_report(const std::string& in_path, const std::vector<std::string>& curve_paths, const std::string& out_path,
               const std::string& curves_out) {
  std::ifstream in(in_path);
  if (!in) throw mcs::Error(mcs::ErrorCode::kFileNotFound, in_path);
  const auto rows = mcs::read_results_csv(in);
  std::vector<mcs::Curve> curves;
  for (const auto& p : curve_paths) {
    std::ifstream cin(p);
    if (!cin) throw mcs::Error(mcs::ErrorCode::kFileNotFound, p);
    curves.push_back(mcs::read_curve_csv(cin, std::filesystem::path(p).stem().string()));
  }
  const auto rep = mcs::build_report(rows, std::move(curves));
  if (out_path.empty() || out_path == "-") {
    mcs::render_report(std::cout, rep);
  } else {
    auto out = open_out(out_path);
    mcs::render_report(out, rep);
  }
  if (!curves_out.empty()) {
    auto out = open_out(curves_out);
    mcs::write_curves_csv(out, rep.curves);
  }
  return 0;
}

int cmd_oracle(const std::string& config, std::optional<std::uint64_t> seed, int horizon) {
  const auto c = base_config(config);
  const auto result = mcs::brute_force_optimal(c, seed.value_or(c.seed), horizon);
  std::cout << "value " << mcs::detail::format_double(result.value) << '\n';
  std::cout << "root_actions " << result.root_actions << '\n';
  std::cout << "leaves " << result.leaves << '\n';
  for (std::size_t h = 0; h < result.actions.size(); ++h) {
    std::cout << "interval " << h << ' ';
    print_action(std::cout, result.actions[h]);
    std::cout << '\n';
  }
  return 0;
}

int cmd_events(const std::string& config, const std::string& policy, std::optional<std::uint64_t> seed,
               const std::string& out_path) {
  const auto c = base_config(config);
  const std::uint64_t s = seed.value_or(c.seed);
  mcs::Simulator sim;
  sim.reset(c, s);
  std::vector<mcs::Action> plan;
  mcs::Policy select;
  if (policy == "oracle") plan = mcs::brute_force_optimal(sim).actions;
  else select = mcs::make_heuristic(policy, c, s);
  for (std::size_t h = 0; !sim.done(); ++h) {
    sim.step(select ? select(sim.view()) : (h < plan.size() ? plan[h] : mcs::Action{}));
  }
  if (out_path.empty() || out_path == "-") {
    mcs::write_event_log(std::cout, sim.events());
  } else {
    auto out = open_out(out_path);
    mcs::write_event_log(out, sim.events());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Participant-selection simulator for mobile crowdsourcing"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run episodes and write a results table");
  run_cmd->add_option("--config", run.config, "Config file (key = value)");
  run_cmd->add_option("--policy", run.policy, "npf | napf | wpf | random | oracle | external");
  run_cmd->add_option("--settings", run.settings, "s,t,p;s,t,p or 'standard'");
  run_cmd->add_option("--preset", run.preset, "Preset name(s), comma-separated, or 'all'");
  run_cmd->add_option("--episodes", run.episodes, "Episodes per setting and preset")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--seed", run.seed, "Base seed; episode i uses seed + i");
  run_cmd->add_option("--out", run.out, "Results CSV path ('-' for stdout)");
  run_cmd->add_option("--endpoint", run.endpoint, "host:port of the agent for --policy external");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--timing", run.timing, "Add a wall_time_ms column");

  std::string serve_config, listen;
  bool stdio = false;
  int max_connections = -1;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the line protocol");
  serve_cmd->add_option("--config", serve_config, "Base config for every session");
  auto* stdio_opt = serve_cmd->add_flag("--stdio", stdio, "Serve one session on stdin/stdout");
  serve_cmd->add_option("--listen", listen, "addr:port for TCP")->excludes(stdio_opt);
  serve_cmd->add_option("--max-connections", max_connections, "Stop after this many connections");

  std::string report_in, report_out, curves_out;
  std::vector<std::string> curves;
  auto* report_cmd = app.add_subcommand("report", "Summarise a results table");
  report_cmd->add_option("--in", report_in, "Results CSV")->required();
  report_cmd->add_option("--curves", curves, "Learning-curve CSV (repeatable)");
  report_cmd->add_option("--out", report_out, "Report path ('-' for stdout)");
  report_cmd->add_option("--curves-out", curves_out, "Write the merged curve export here");

  std::string oracle_config;
  std::optional<std::uint64_t> oracle_seed;
  int horizon = -1;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive optimum for a small instance");
  oracle_cmd->add_option("--config", oracle_config, "Config file");
  oracle_cmd->add_option("--seed", oracle_seed, "Episode seed");
  oracle_cmd->add_option("--horizon", horizon, "Intervals to search (default: whole episode)");

  std::string events_config, events_policy = "npf", events_out = "-";
  std::optional<std::uint64_t> events_seed;
  auto* events_cmd = app.add_subcommand("events", "Run one episode and write its event log");
  events_cmd->add_option("--config", events_config, "Config file");
  events_cmd->add_option("--policy", events_policy, "npf | napf | wpf | random | oracle");
  events_cmd->add_option("--seed", events_seed, "Episode seed");
  events_cmd->add_option("--out", events_out, "Event log path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*serve_cmd) return cmd_serve(serve_config, stdio, listen, max_connections);
    if (*report_cmd) return cmd_report(report_in, curves, report_out, curves_out);
    if (*oracle_cmd) return cmd_oracle(oracle_config, oracle_seed, horizon);
    if (*events_cmd) return cmd_events(events_config, events_policy, events_seed, events_out);
  } catch (const mcs::Error& e) {
    std::cerr << "error " << mcs::to_string(e.code()) << ": " << e.detail() << '\n';
    return 1;
  }
  return 0;
}

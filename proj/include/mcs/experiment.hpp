#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mcs/baselines.hpp"
#include "mcs/config.hpp"
#include "mcs/error.hpp"
#include "mcs/net.hpp"
#include "mcs/protocol.hpp"
#include "mcs/reward.hpp"
#include "mcs/simulator.hpp"

namespace mcs {

struct Setting {
  int s = 1;
  int t = 1;
  int p = 1;
  bool operator==(const Setting&) const = default;
  auto operator<=>(const Setting&) const = default;
};

/// The eight (s, t, p) environment settings of the comparison grid.
inline const std::vector<Setting>& standard_settings() {
  static const std::vector<Setting> kSettings = {{2, 2, 10},  {2, 5, 10},  {5, 5, 5},   {5, 5, 15},
                                                 {10, 5, 10}, {5, 10, 15}, {10, 10, 20}, {20, 5, 30}};
  return kSettings;
}

/// "s,t,p;s,t,p" (';' or whitespace separated) or "standard".
inline std::vector<Setting> parse_settings(std::string_view text) {
  text = detail::trim(text);
  if (text == "standard") return standard_settings();
  std::vector<Setting> out;
  std::string item;
  auto flush = [&] {
    if (item.empty()) return;
    const auto parts = detail::split_csv(item);
    Setting st;
    if (parts.size() != 3 || !detail::parse_number(parts[0], st.s) || !detail::parse_number(parts[1], st.t) ||
        !detail::parse_number(parts[2], st.p)) {
      throw Error(ErrorCode::kInvalidConfig, "bad setting '" + item + "', expected s,t,p");
    }
    out.push_back(st);
    item.clear();
  };
  for (char ch : text) {
    if (ch == ';' || ch == ' ' || ch == '\t' || ch == '\n') flush();
    else item.push_back(ch);
  }
  flush();
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no settings given");
  return out;
}

/// Comma-separated preset names, "all" for the four named presets, or "config" to keep
/// the weights from the configuration.
inline std::vector<std::string> parse_presets(std::string_view text) {
  text = detail::trim(text);
  if (text == "all") return {kPresetNames.begin(), kPresetNames.end()};
  std::vector<std::string> out;
  for (auto part : detail::split_csv(text)) {
    if (part.empty()) continue;
    if (part != "config") (void)preset(part);
    out.emplace_back(part);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no presets given");
  return out;
}

struct ResultsRow {
  std::string policy;
  std::string preset;
  int s = 0;
  int t = 0;
  int p = 0;
  std::uint64_t seed = 0;
  int episode = 0;
  std::string status = "ok";  // "ok" or "failed:<CODE>"
  double total_reward = 0.0;
  RewardBreakdown components;  // per-component episode sums (total unused)
  RewardWeights weights;
  double wall_time_ms = 0.0;

  bool ok() const { return status == "ok"; }

  bool operator==(const ResultsRow&) const = default;
};

inline constexpr double kRowRecheckTolerance = 1e-6;

inline bool row_consistent(const ResultsRow& r) {
  return std::abs(r.total_reward - weighted_sum(r.components, r.weights)) <= kRowRecheckTolerance;
}

/// Agent side of the protocol when the runner drives an external policy: the runner
/// sends `observation` lines and expects one `act` line back per decision.
class ExternalAgent {
 public:
  explicit ExternalAgent(const net::Endpoint& endpoint) : sock_(net::connect_tcp(endpoint)) {}

  Action act(const Observation& obs) {
    if (!sock_.write_line(protocol::encode(protocol::ObservationMsg{obs}))) {
      throw Error(ErrorCode::kEnvUnreachable, "agent connection lost");
    }
    std::string line;
    if (!sock_.read_line(line)) throw Error(ErrorCode::kEnvUnreachable, "agent closed connection");
    auto msg = protocol::decode(line);
    if (auto* act = std::get_if<protocol::ActMsg>(&msg)) return std::move(act->action);
    throw Error(ErrorCode::kProtocol, "agent replied with a non-act message");
  }

  void close() {
    sock_.write_line(protocol::encode(protocol::CloseMsg{}));
    sock_.close();
  }

 private:
  net::LineSocket sock_;
};

struct RunRequest {
  SimConfig base;
  std::string policy = "npf";  // npf | napf | wpf | random | oracle | external
  std::vector<Setting> settings;
  std::vector<std::string> presets;  // empty keeps the base configuration's weights
  int episodes = 1;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  std::optional<net::Endpoint> endpoint;  // for policy == external
};

inline constexpr std::string_view kPolicyNames[] = {"npf", "napf", "wpf", "random", "oracle", "external"};

/// Runs one episode. Environment errors are captured in the row's status.
inline ResultsRow run_episode(const SimConfig& config, std::string_view policy, std::uint64_t seed,
                              const DataResources& resources, const std::optional<net::Endpoint>& endpoint = {}) {
  ResultsRow row;
  row.policy = std::string(policy);
  row.preset = config.reward;
  row.s = config.intervals_per_episode;
  row.t = config.max_tasks_per_interval;
  row.p = config.num_participants;
  row.seed = seed;
  row.weights = config.weights;
  const auto start = std::chrono::steady_clock::now();
  try {
    Simulator sim;
    Observation obs = sim.reset(config, seed, resources);
    Policy select;
    std::vector<Action> plan;
    std::optional<ExternalAgent> agent;
    if (policy == "oracle") {
      plan = brute_force_optimal(sim).actions;
    } else if (policy == "external") {
      if (!endpoint) throw Error(ErrorCode::kInvalidConfig, "external policy needs an endpoint");
      agent.emplace(*endpoint);
    } else {
      select = make_heuristic(policy, config, seed);
    }
    for (std::size_t h = 0; !sim.done(); ++h) {
      Action action;
      if (agent) action = agent->act(obs);
      else if (!select) action = h < plan.size() ? plan[h] : Action{};
      else action = select(sim.view());
      Transition tr = sim.step(action);
      row.total_reward += tr.reward;
      row.components += tr.breakdown;
      obs = std::move(tr.observation);
    }
    if (agent) agent->close();
    row.components.total = 0.0;
    if (!row_consistent(row)) row.status = "failed:REWARD_MISMATCH";
  } catch (const Error& e) {
    row.status = "failed:" + std::string(to_string(e.code()));
  }
  row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// One row per (setting, preset, episode i), seeded base_seed + i. Row order is
/// independent of `jobs`.
inline std::vector<ResultsRow> run_episodes(const RunRequest& req) {
  if (std::find(std::begin(kPolicyNames), std::end(kPolicyNames), req.policy) == std::end(kPolicyNames)) {
    throw Error(ErrorCode::kInvalidConfig, "unknown policy '" + req.policy + "'");
  }
  struct Job {
    SimConfig config;
    std::uint64_t seed;
    int episode;
  };
  std::vector<Job> jobs;
  const std::vector<std::string> presets = req.presets.empty() ? std::vector<std::string>{"config"} : req.presets;
  for (const Setting& st : req.settings) {
    for (const std::string& name : presets) {
      SimConfig c = req.base;
      c.intervals_per_episode = st.s;
      c.max_tasks_per_interval = st.t;
      c.num_participants = st.p;
      c.min_tasks_per_interval = std::min(c.min_tasks_per_interval, st.t);
      if (name != "config") apply_config_entry(c, "reward", name);
      for (int i = 0; i < req.episodes; ++i) jobs.push_back({c, req.base_seed + static_cast<std::uint64_t>(i), i});
    }
  }
  std::vector<ResultsRow> rows(jobs.size());
  if (jobs.empty()) return rows;

  std::optional<DataResources> resources;
  std::string resource_error;
  try {
    resources = load_resources(req.base);
  } catch (const Error& e) {
    resource_error = "failed:" + std::string(to_string(e.code()));
  }
  auto work = [&](std::size_t i) {
    const Job& job = jobs[i];
    if (!resources) {
      ResultsRow& r = rows[i];
      r = ResultsRow{};
      r.policy = req.policy;
      r.preset = job.config.reward;
      r.s = job.config.intervals_per_episode;
      r.t = job.config.max_tasks_per_interval;
      r.p = job.config.num_participants;
      r.seed = job.seed;
      r.episode = job.episode;
      r.status = resource_error;
      r.weights = job.config.weights;
      return;
    }
    rows[i] = run_episode(job.config, req.policy, job.seed, *resources, req.endpoint);
    rows[i].episode = job.episode;
  };
  const int workers = std::max(1, std::min<int>(req.jobs, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) work(i);
      });
    }
  }
  return rows;
}

inline constexpr std::array<std::string_view, 5> kComponentNames = {"o_assign_dist", "o_trip_dist", "o_time",
                                                                    "o_fairness", "o_energy"};
inline constexpr std::array<std::string_view, 5> kWeightNames = {"w_assign_dist", "w_trip_dist", "w_time",
                                                                 "w_fairness", "w_energy"};

inline std::array<double, 5> component_array(const RewardBreakdown& b) {
  return {b.o_assign_dist, b.o_trip_dist, b.o_time, b.o_fairness, b.o_energy};
}
inline std::array<double, 5> weight_array(const RewardWeights& w) {
  return {w.w_assign_dist, w.w_trip_dist, w.w_time, w.w_fairness, w.w_energy};
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultsRow>& rows, bool include_timing = false) {
  using detail::format_double;
  out << "policy,preset,s,t,p,seed,episode,status,total_reward";
  for (auto n : kComponentNames) out << ',' << n;
  for (auto n : kWeightNames) out << ',' << n;
  if (include_timing) out << ",wall_time_ms";
  out << '\n';
  for (const ResultsRow& r : rows) {
    out << r.policy << ',' << r.preset << ',' << r.s << ',' << r.t << ',' << r.p << ',' << r.seed << ',' << r.episode
        << ',' << r.status << ',' << format_double(r.total_reward);
    for (double v : component_array(r.components)) out << ',' << format_double(v);
    for (double v : weight_array(r.weights)) out << ',' << format_double(v);
    if (include_timing) out << ',' << format_double(r.wall_time_ms);
    out << '\n';
  }
}

inline std::vector<ResultsRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyResults, "results file is empty");
  const auto header = detail::split_csv(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(header[i])] = i;
  auto need = [&](std::string_view name) {
    auto it = col.find(name);
    if (it == col.end()) throw Error(ErrorCode::kSchemaMismatch, "results file lacks column '" + std::string(name) + "'");
    return it->second;
  };
  const std::size_t c_policy = need("policy"), c_preset = need("preset"), c_s = need("s"), c_t = need("t"),
                    c_p = need("p"), c_seed = need("seed"), c_ep = need("episode"), c_status = need("status"),
                    c_total = need("total_reward");
  std::array<std::size_t, 5> c_comp{}, c_w{};
  for (std::size_t k = 0; k < 5; ++k) {
    c_comp[k] = need(kComponentNames[k]);
    c_w[k] = need(kWeightNames[k]);
  }
  const auto c_time = col.find("wall_time_ms");
  std::vector<ResultsRow> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() < header.size()) throw Error(ErrorCode::kSchemaMismatch, "short results row");
    ResultsRow r;
    r.policy = std::string(f[c_policy]);
    r.preset = std::string(f[c_preset]);
    r.status = std::string(f[c_status]);
    bool ok = detail::parse_number(f[c_s], r.s) && detail::parse_number(f[c_t], r.t) &&
              detail::parse_number(f[c_p], r.p) && detail::parse_number(f[c_seed], r.seed) &&
              detail::parse_number(f[c_ep], r.episode) && detail::parse_number(f[c_total], r.total_reward);
    std::array<double, 5> comp{}, w{};
    for (std::size_t k = 0; k < 5; ++k) {
      ok = ok && detail::parse_number(f[c_comp[k]], comp[k]) && detail::parse_number(f[c_w[k]], w[k]);
    }
    if (c_time != col.end()) ok = ok && detail::parse_number(f[c_time->second], r.wall_time_ms);
    if (!ok) throw Error(ErrorCode::kSchemaMismatch, "unparseable results row: " + line);
    r.components = {comp[0], comp[1], comp[2], comp[3], comp[4], 0.0};
    r.weights = {w[0], w[1], w[2], w[3], w[4]};
    rows.push_back(std::move(r));
  }
  return rows;
}

struct SettingSummary {
  std::string policy;
  std::string preset;
  Setting setting;
  int episodes = 0;
  int failed = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 below two episodes
};

/// Mean and spread of total reward per (policy, preset, setting), in first-seen order.
inline std::vector<SettingSummary> summarize(const std::vector<ResultsRow>& rows) {
  std::vector<SettingSummary> out;
  std::vector<std::vector<double>> values;
  for (const ResultsRow& r : rows) {
    const Setting st{r.s, r.t, r.p};
    auto it = std::find_if(out.begin(), out.end(), [&](const SettingSummary& s) {
      return s.policy == r.policy && s.preset == r.preset && s.setting == st;
    });
    if (it == out.end()) {
      out.push_back({r.policy, r.preset, st});
      values.emplace_back();
      it = out.end() - 1;
    }
    auto& vals = values[static_cast<std::size_t>(it - out.begin())];
    if (r.ok()) vals.push_back(r.total_reward);
    else ++it->failed;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    out[i].episodes = static_cast<int>(v.size());
    if (v.empty()) continue;
    double sum = 0.0;
    for (double x : v) sum += x;
    out[i].mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - out[i].mean) * (x - out[i].mean);
      out[i].stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

/// |w_k o_k| / sum_j |w_j o_j|, accumulated over a row set. All zeros when the row set
/// carries no reward mass.
inline std::array<double, 5> reward_proportions(const std::vector<const ResultsRow*>& rows) {
  std::array<double, 5> mass{};
  for (const ResultsRow* r : rows) {
    const auto c = component_array(r->components);
    const auto w = weight_array(r->weights);
    for (std::size_t k = 0; k < 5; ++k) mass[k] += std::abs(w[k] * c[k]);
  }
  double total = 0.0;
  for (double m : mass) total += m;
  if (total > 0.0) {
    for (double& m : mass) m /= total;
  }
  return mass;
}

struct CurvePoint {
  double epoch = 0.0;
  double mean_cumulative_reward = 0.0;
  double stderr_ = 0.0;
};

struct Curve {
  std::string label;
  std::vector<CurvePoint> points;

  /// Trapezoidal area under mean reward over epochs.
  double area() const {
    double a = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      a += 0.5 * (points[i].mean_cumulative_reward + points[i - 1].mean_cumulative_reward) *
           (points[i].epoch - points[i - 1].epoch);
    }
    return a;
  }
};

/// Reads `epoch,mean_cumulative_reward,stderr` rows (header required).
inline Curve read_curve_csv(std::istream& in, std::string label) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyResults, "curve file is empty");
  const auto header = detail::split_csv(line);
  if (header.size() < 3 || header[0] != "epoch" || header[1] != "mean_cumulative_reward" || header[2] != "stderr") {
    throw Error(ErrorCode::kSchemaMismatch, "curve header must be epoch,mean_cumulative_reward,stderr");
  }
  Curve c{std::move(label), {}};
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    CurvePoint pt;
    if (f.size() < 3 || !detail::parse_number(f[0], pt.epoch) || !detail::parse_number(f[1], pt.mean_cumulative_reward) ||
        !detail::parse_number(f[2], pt.stderr_)) {
      throw Error(ErrorCode::kSchemaMismatch, "unparseable curve row: " + line);
    }
    c.points.push_back(pt);
  }
  return c;
}

inline void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves) {
  out << "label,epoch,mean_cumulative_reward,stderr\n";
  for (const Curve& c : curves) {
    for (const CurvePoint& p : c.points) {
      out << c.label << ',' << detail::format_double(p.epoch) << ',' << detail::format_double(p.mean_cumulative_reward)
          << ',' << detail::format_double(p.stderr_) << '\n';
    }
  }
}

struct ProportionEntry {
  std::string preset;
  std::string policy;
  std::array<double, 5> components{};
  std::array<double, 3> goals{};  // profit (assign + trip), fairness (time + fairness), effectiveness (energy)
};

struct Report {
  std::vector<std::string> presets;
  std::vector<std::string> policies;
  std::vector<Setting> settings;
  std::vector<SettingSummary> summaries;
  std::vector<ProportionEntry> proportions;
  std::vector<Curve> curves;
  int inconsistent_rows = 0;
  int failed_rows = 0;

  /// Mean total reward for a grid cell, if any successful episode exists.
  std::optional<double> cell(const std::string& preset, const std::string& policy, const Setting& st) const {
    for (const auto& s : summaries) {
      if (s.preset == preset && s.policy == policy && s.setting == st && s.episodes > 0) return s.mean;
    }
    return std::nullopt;
  }
};

inline Report build_report(const std::vector<ResultsRow>& rows, std::vector<Curve> curves = {}) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyResults, "no results rows");
  Report rep;
  auto remember = [](auto& list, const auto& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  for (const ResultsRow& r : rows) {
    remember(rep.presets, r.preset);
    remember(rep.policies, r.policy);
    remember(rep.settings, Setting{r.s, r.t, r.p});
    if (!r.ok()) ++rep.failed_rows;
    else if (!row_consistent(r)) ++rep.inconsistent_rows;
  }
  rep.summaries = summarize(rows);
  for (const auto& preset_name : rep.presets) {
    for (const auto& policy : rep.policies) {
      std::vector<const ResultsRow*> subset;
      for (const ResultsRow& r : rows) {
        if (r.ok() && r.preset == preset_name && r.policy == policy) subset.push_back(&r);
      }
      if (subset.empty()) continue;
      ProportionEntry e{preset_name, policy, reward_proportions(subset), {}};
      e.goals = {e.components[0] + e.components[1], e.components[2] + e.components[3], e.components[4]};
      rep.proportions.push_back(e);
    }
  }
  rep.curves = std::move(curves);
  return rep;
}

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline void render_report(std::ostream& out, const Report& rep) {
  for (const auto& preset_name : rep.presets) {
    out << "## Mean total reward, preset " << preset_name << "\n\n| s | t | p |";
    for (const auto& pol : rep.policies) out << ' ' << pol << " |";
    out << "\n|---|---|---|";
    for (std::size_t i = 0; i < rep.policies.size(); ++i) out << "---|";
    out << '\n';
    for (const Setting& st : rep.settings) {
      out << "| " << st.s << " | " << st.t << " | " << st.p << " |";
      for (const auto& pol : rep.policies) {
        const auto v = rep.cell(preset_name, pol, st);
        out << ' ' << (v ? fixed(*v) : std::string("-")) << " |";
      }
      out << '\n';
    }
    out << '\n';
  }
  out << "## Reward proportions |w_k o_k| / sum |w_j o_j|\n\n| preset | policy |";
  for (auto n : kComponentNames) out << ' ' << n << " |";
  out << " profit | fairness | effectiveness |\n|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& e : rep.proportions) {
    out << "| " << e.preset << " | " << e.policy << " |";
    for (double v : e.components) out << ' ' << fixed(v) << " |";
    for (double v : e.goals) out << ' ' << fixed(v) << " |";
    out << '\n';
  }
  out << '\n';
  if (!rep.curves.empty()) {
    out << "## Learning curves\n\n| label | epochs | final mean reward | area under curve |\n|---|---|---|---|\n";
    for (const Curve& c : rep.curves) {
      out << "| " << c.label << " | " << c.points.size() << " | "
          << (c.points.empty() ? std::string("-") : fixed(c.points.back().mean_cumulative_reward)) << " | "
          << fixed(c.area()) << " |\n";
    }
    out << '\n';
  }
  out << "failed rows: " << rep.failed_rows << ", rows failing reward recheck: " << rep.inconsistent_rows << '\n';
}

}  // namespace mcs

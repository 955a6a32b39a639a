#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mcs/config.hpp"
#include "mcs/domain.hpp"
#include "mcs/error.hpp"
#include "mcs/simulator.hpp"

namespace mcs::protocol {

using nlohmann::json;

struct ResetMsg {
  std::map<std::string, std::string> config;  // same keys as the config file
  std::optional<std::uint64_t> seed;
  bool operator==(const ResetMsg&) const = default;
};

struct ObservationMsg {
  Observation observation;
  bool operator==(const ObservationMsg&) const = default;
};

struct ActMsg {
  Action action;
  bool operator==(const ActMsg&) const = default;
};

struct TransitionMsg {
  Transition transition;
  bool operator==(const TransitionMsg&) const = default;
};

struct ErrorMsg {
  std::string code;
  std::string detail;
  bool operator==(const ErrorMsg&) const = default;
};

struct CloseMsg {
  bool operator==(const CloseMsg&) const = default;
};

using Message = std::variant<ResetMsg, ObservationMsg, ActMsg, TransitionMsg, ErrorMsg, CloseMsg>;

namespace detail {

inline json matrix_to_json(const FeatureMatrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}, {"mask", m.mask}};
}

inline FeatureMatrix matrix_from_json(const json& j) {
  FeatureMatrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.values = j.at("values").get<std::vector<double>>();
  m.mask = j.at("mask").get<std::vector<std::uint8_t>>();
  if (m.values.size() != m.rows * m.cols || m.mask.size() != m.rows) {
    throw Error(ErrorCode::kProtocol, "feature matrix shape mismatch");
  }
  return m;
}

inline json observation_to_json(const Observation& o) {
  return json{{"interval", o.interval},
              {"task_ids", o.task_ids},
              {"participant_ids", o.participant_ids},
              {"task_features", matrix_to_json(o.task_features)},
              {"participant_features", matrix_to_json(o.participant_features)},
              {"env_features_embedded", o.env_features_embedded}};
}

inline Observation observation_from_json(const json& j) {
  Observation o;
  o.interval = j.at("interval").get<int>();
  o.task_ids = j.at("task_ids").get<std::vector<int>>();
  o.participant_ids = j.at("participant_ids").get<std::vector<int>>();
  o.task_features = matrix_from_json(j.at("task_features"));
  o.participant_features = matrix_from_json(j.at("participant_features"));
  o.env_features_embedded = j.value("env_features_embedded", true);
  return o;
}

inline json breakdown_to_json(const RewardBreakdown& b) {
  return json{{"o_assign_dist", b.o_assign_dist}, {"o_trip_dist", b.o_trip_dist}, {"o_time", b.o_time},
              {"o_fairness", b.o_fairness},       {"o_energy", b.o_energy},       {"total", b.total}};
}

inline RewardBreakdown breakdown_from_json(const json& j) {
  RewardBreakdown b;
  b.o_assign_dist = j.at("o_assign_dist").get<double>();
  b.o_trip_dist = j.at("o_trip_dist").get<double>();
  b.o_time = j.at("o_time").get<double>();
  b.o_fairness = j.at("o_fairness").get<double>();
  b.o_energy = j.at("o_energy").get<double>();
  b.total = j.at("total").get<double>();
  return b;
}

inline json info_to_json(const StepInfo& i) {
  return json{{"arrivals", i.arrivals},     {"assignments", i.assignments},       {"pickups", i.pickups},
              {"completions", i.completions}, {"cancellations", i.cancellations}, {"expirations", i.expirations}};
}

inline StepInfo info_from_json(const json& j) {
  StepInfo i;
  i.arrivals = j.value("arrivals", 0);
  i.assignments = j.value("assignments", 0);
  i.pickups = j.value("pickups", 0);
  i.completions = j.value("completions", 0);
  i.cancellations = j.value("cancellations", 0);
  i.expirations = j.value("expirations", 0);
  return i;
}

inline std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return mcs::detail::format_double(v.get<double>());
  throw Error(ErrorCode::kProtocol, "config values must be scalars");
}

}  // namespace detail

/// One message as a single line of JSON (no trailing newline).
inline std::string encode(const Message& message) {
  json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ResetMsg>) {
          json out{{"type", "reset"}, {"config", m.config}};
          if (m.seed) out["seed"] = *m.seed;
          return out;
        } else if constexpr (std::is_same_v<T, ObservationMsg>) {
          return json{{"type", "observation"}, {"observation", detail::observation_to_json(m.observation)}};
        } else if constexpr (std::is_same_v<T, ActMsg>) {
          json list = json::array();
          for (const Assignment& a : m.action.assignments) {
            list.push_back(json{{"task_id", a.task_id}, {"participants", a.participant_ids}});
          }
          return json{{"type", "act"}, {"assignments", std::move(list)}};
        } else if constexpr (std::is_same_v<T, TransitionMsg>) {
          const Transition& t = m.transition;
          return json{{"type", "transition"},
                      {"reward", t.reward},
                      {"breakdown", detail::breakdown_to_json(t.breakdown)},
                      {"done", t.done},
                      {"info", detail::info_to_json(t.info)},
                      {"observation", detail::observation_to_json(t.observation)}};
        } else if constexpr (std::is_same_v<T, ErrorMsg>) {
          return json{{"type", "error"}, {"code", m.code}, {"detail", m.detail}};
        } else {
          return json{{"type", "close"}};
        }
      },
      message);
  return j.dump();
}

/// Parses one line. Unknown fields are ignored; anything malformed raises PROTOCOL.
inline Message decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw Error(ErrorCode::kProtocol, "message must be a JSON object");
    const auto type = j.at("type").get<std::string>();
    if (type == "reset") {
      ResetMsg m;
      if (j.contains("config")) {
        const json& cfg = j.at("config");
        if (!cfg.is_object()) throw Error(ErrorCode::kProtocol, "reset.config must be an object");
        for (const auto& [k, v] : cfg.items()) m.config[k] = detail::scalar_to_string(v);
      }
      if (j.contains("seed") && !j.at("seed").is_null()) {
        if (!j.at("seed").is_number_unsigned()) throw Error(ErrorCode::kProtocol, "seed must be a non-negative integer");
        m.seed = j.at("seed").get<std::uint64_t>();
      }
      return m;
    }
    if (type == "observation") return ObservationMsg{detail::observation_from_json(j.at("observation"))};
    if (type == "act") {
      ActMsg m;
      const json& list = j.at("assignments");
      if (!list.is_array()) throw Error(ErrorCode::kProtocol, "act.assignments must be an array");
      for (const json& a : list) {
        m.action.assignments.push_back({a.at("task_id").get<int>(), a.at("participants").get<std::vector<int>>()});
      }
      return m;
    }
    if (type == "transition") {
      TransitionMsg m;
      m.transition.reward = j.at("reward").get<double>();
      m.transition.breakdown = detail::breakdown_from_json(j.at("breakdown"));
      m.transition.done = j.at("done").get<bool>();
      m.transition.info = j.contains("info") ? detail::info_from_json(j.at("info")) : StepInfo{};
      m.transition.observation = detail::observation_from_json(j.at("observation"));
      return m;
    }
    if (type == "error") return ErrorMsg{j.at("code").get<std::string>(), j.value("detail", std::string{})};
    if (type == "close") return CloseMsg{};
    throw Error(ErrorCode::kProtocol, "unknown message type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad message: ") + e.what());
  }
}

inline std::string error_line(ErrorCode code, const std::string& detail) {
  return encode(ErrorMsg{std::string(to_string(code)), detail});
}

/// Environment side of one connection.
///
/// awaiting_reset --reset--> running --act*--> done --reset--> running
///
/// Any state accepts `close`. Errors never change state.
class Session {
 public:
  enum class State : std::uint8_t { kAwaitingReset, kRunning, kDone, kClosed };

  explicit Session(SimConfig base = {}) : base_(std::move(base)) {}

  State state() const { return state_; }
  bool closed() const { return state_ == State::kClosed; }
  const Simulator& simulator() const { return sim_; }

  /// Handles one input line; returns the response lines (possibly none).
  std::vector<std::string> handle(std::string_view line) {
    if (state_ == State::kClosed) return {error_line(ErrorCode::kProtocol, "session closed")};
    Message msg;
    try {
      msg = decode(line);
    } catch (const Error& e) {
      return {error_line(e.code(), e.detail())};
    }
    if (std::holds_alternative<CloseMsg>(msg)) {
      state_ = State::kClosed;
      return {};
    }
    if (const auto* reset = std::get_if<ResetMsg>(&msg)) return {on_reset(*reset)};
    if (const auto* act = std::get_if<ActMsg>(&msg)) return {on_act(*act)};
    return {error_line(ErrorCode::kProtocol, "unexpected message type from client")};
  }

 private:
  std::string on_reset(const ResetMsg& m) {
    try {
      SimConfig c = base_;
      std::vector<std::pair<std::string, std::string>> entries(m.config.begin(), m.config.end());
      apply_config_entries(c, entries);
      const std::uint64_t seed = m.seed.value_or(c.seed);
      Simulator fresh;
      Observation obs = fresh.reset(c, seed);
      sim_ = std::move(fresh);
      state_ = State::kRunning;
      return encode(ObservationMsg{std::move(obs)});
    } catch (const Error& e) {
      return error_line(e.code(), e.detail());
    }
  }

  std::string on_act(const ActMsg& m) {
    if (state_ == State::kAwaitingReset) return error_line(ErrorCode::kProtocol, "act before reset");
    if (state_ == State::kDone) return error_line(ErrorCode::kEpisodeDone, "episode finished; send reset or close");
    try {
      Transition t = sim_.step(m.action);
      if (t.done) state_ = State::kDone;
      return encode(TransitionMsg{std::move(t)});
    } catch (const Error& e) {
      return error_line(e.code(), e.detail());
    }
  }

  SimConfig base_;
  Simulator sim_;
  State state_ = State::kAwaitingReset;
};

/// Runs one session over a line stream until `close` or end of input.
inline void serve_stream(std::istream& in, std::ostream& out, const SimConfig& base = {}) {
  Session session(base);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (const std::string& reply : session.handle(line)) out << reply << '\n';
    out.flush();
  }
}

}  // namespace mcs::protocol

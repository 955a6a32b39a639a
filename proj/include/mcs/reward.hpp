#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include "mcs/domain.hpp"
#include "mcs/error.hpp"

namespace mcs {

struct NormalizationConstants {
  double dist_scale = 1.0;    // cells
  double time_scale = 1.0;    // intervals
  double fare_scale = 10.0;   // currency
  double energy_scale = 1.0;  // energy units

  double fairness_scale() const { return dist_scale + time_scale; }

  bool valid() const {
    return dist_scale > 0.0 && time_scale > 0.0 && fare_scale > 0.0 && energy_scale > 0.0 &&
           std::isfinite(dist_scale + time_scale + fare_scale + energy_scale);
  }
};

/// Per-cell movement energy: e0 + e1 * speed^2.
struct EnergyModel {
  double e0 = 1.0;
  double e1 = 0.1;

  double per_cell(double speed) const { return e0 + e1 * speed * speed; }
};

/// Raw (unnormalised) quantities accumulated over one interval.
struct IntervalTally {
  double assign_distance = 0.0;  // sum over this interval's assignments
  double trip_distance = 0.0;    // sum over completions of origin->destination cells
  double time_cost = 0.0;        // sum over completions of (completion - arrival) intervals
  double energy = 0.0;           // sum over completions of task energy
  double dispersion_before = 0.0;
  double dispersion_after = 0.0;
};

/// Population standard deviation; 0 for empty and single-element populations.
inline double population_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

/// Lifetime dispersion: stddev of per-participant assignment distance plus stddev of
/// per-task time cost over completed tasks.
inline double fairness_dispersion(std::span<const Participant> participants, std::span<const double> time_costs) {
  double participant_term = 0.0;
  if (participants.size() >= 2) {
    double mean = 0.0;
    for (const auto& p : participants) mean += p.cum_assign_distance;
    mean /= static_cast<double>(participants.size());
    double ss = 0.0;
    for (const auto& p : participants) ss += (p.cum_assign_distance - mean) * (p.cum_assign_distance - mean);
    participant_term = std::sqrt(ss / static_cast<double>(participants.size()));
  }
  return participant_term + population_stddev(time_costs);
}

/// Unweighted components for one interval. Every component is higher-is-better.
/// The fairness component is the negated change of lifetime dispersion, so an episode's
/// fairness total telescopes to minus the final dispersion.
inline RewardBreakdown compute_components(const IntervalTally& tally, const NormalizationConstants& norm) {
  RewardBreakdown b;
  b.o_assign_dist = 0.0 - tally.assign_distance / norm.dist_scale;
  b.o_trip_dist = tally.trip_distance / norm.dist_scale;
  b.o_time = 0.0 - tally.time_cost / norm.time_scale;
  b.o_fairness = 0.0 - (tally.dispersion_after - tally.dispersion_before) / norm.fairness_scale();
  b.o_energy = 0.0 - tally.energy / norm.energy_scale;
  return b;
}

inline double weighted_sum(const RewardBreakdown& b, const RewardWeights& w) {
  return w.w_assign_dist * b.o_assign_dist + w.w_trip_dist * b.o_trip_dist + w.w_time * b.o_time +
         w.w_fairness * b.o_fairness + w.w_energy * b.o_energy;
}

/// Weighted sum of the components; also stored into breakdown.total.
inline double combine(RewardBreakdown& breakdown, const RewardWeights& weights) {
  breakdown.total = weighted_sum(breakdown, weights);
  return breakdown.total;
}

inline constexpr std::array<std::string_view, 4> kPresetNames = {"fairness_first", "energy_first", "profit_first",
                                                                  "balanced"};

/// Named weight vectors. In each "*_first" preset the favoured goal's weight equals the
/// sum of all the other weights.
inline RewardWeights preset(std::string_view name) {
  if (name == "balanced") return {1, 1, 1, 1, 1};
  if (name == "fairness_first") return {1, 1, 1, 4, 1};
  if (name == "energy_first") return {1, 1, 1, 1, 4};
  if (name == "profit_first") return {1.5, 1.5, 1, 1, 1};
  throw Error(ErrorCode::kUnknownPreset, std::string(name));
}

}  // namespace mcs

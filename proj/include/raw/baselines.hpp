#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raw/model.hpp"
#include "raw/region.hpp"
#include "raw/trajectory.hpp"

namespace raw::eval {

inline constexpr int kStaticsDims = 240;

// Hand-engineered flow representation per region over [t0, t1):
//   96 per-timeslot entry counts + 96 per-timeslot exit counts
//   + 24 hourly unique-user counts + 24 hourly dwell intensities
// (in-region points per present user). Time-of-day buckets aggregate
// across days; membership is strict containment.
std::vector<double> statics_features(const data::Region& region,
                                     const std::vector<data::GriddedTrajectory>& trajs,
                                     int64_t t0, int64_t t1);

struct RolloutTable {
  std::vector<std::string> start_labels;           // e.g. "08:00:00"
  std::vector<int> horizons;                       // 1..H (steps of 900 s)
  std::vector<std::vector<double>> mean_error_m;   // [start][horizon]
  std::vector<std::vector<int>> counts;            // prompts contributing per cell

  std::string to_text() const;
};

struct RolloutPath {
  std::string user_id;
  std::string start_label;
  std::vector<geo::LonLat> truth;
  std::vector<geo::LonLat> predicted;
};

// For each trajectory and start slot: prompt = grid points before the start
// time (same day), greedy rollout of `horizon` steps, haversine error per
// step against the trajectory's own continuation. A cell only aggregates
// prompts whose ground truth extends that far.
RolloutTable rollout_error_table(const model::ModelParams& params,
                                 const data::NormalizationStats& stats,
                                 const std::vector<data::GriddedTrajectory>& trajs,
                                 const std::vector<int>& start_slots, int horizon,
                                 std::vector<RolloutPath>* paths_out = nullptr);

void write_rollout_paths_geojson(const std::string& path, const std::vector<RolloutPath>& paths);

}  // namespace raw::eval

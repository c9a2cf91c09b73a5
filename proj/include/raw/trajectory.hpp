#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "raw/error.hpp"
#include "raw/geo.hpp"

namespace raw::data {

inline constexpr int64_t kGridStepS = 900;  // 15 minutes

struct GpsPoint {
  double lon = 0.0;
  double lat = 0.0;
  int64_t t = 0;
};

// Irregularly sampled per-user GPS sequence; timestamps strictly increasing.
struct RawTrajectory {
  std::string user_id;
  std::vector<GpsPoint> points;

  void validate() const;
};

// Uniform 900 s grid; point j sits at start_t + 900*j.
struct GriddedTrajectory {
  std::string user_id;
  int64_t start_t = 0;
  std::vector<geo::LonLat> coords;

  int64_t time_at(size_t j) const { return start_t + kGridStepS * static_cast<int64_t>(j); }
};

struct NormalizationStats {
  double lon_center = 0.0;
  double lat_center = 0.0;
  double lon_scale = 1.0;
  double lat_scale = 1.0;

  void validate() const;
};

// Linear interpolation per coordinate onto the 900 s grid, clamped outside
// [first.t, last.t]. Output covers grid_start .. last grid time <= last.t
// unless n_steps >= 0 forces an explicit length.
GriddedTrajectory interpolate_to_grid(const RawTrajectory& raw, int64_t grid_start,
                                      int64_t n_steps = -1);

geo::LonLat normalize_point(const geo::LonLat& p, const NormalizationStats& stats);
geo::LonLat denormalize_point(const geo::LonLat& p, const NormalizationStats& stats);
std::vector<geo::LonLat> normalize(const GriddedTrajectory& traj, const NormalizationStats& stats);

// centers = midpoint of the dataset lon/lat ranges, scales = half-extents
// (floored at 1e-6 degrees)
NormalizationStats fit_stats(const std::vector<GriddedTrajectory>& dataset);

// Reinterpret an exactly-gridded raw trajectory (900 s spacing) without
// resampling; throws DataError when the spacing is off.
GriddedTrajectory gridded_from_exact(const RawTrajectory& raw);

// restrict to grid times in [t0, t1); empty result allowed
GriddedTrajectory slice_window(const GriddedTrajectory& traj, int64_t t0, int64_t t1);

struct UserLabels {
  bool is_commuter = false;
  int subway_trip_count = 0;
};

// user_id -> labels, kept sorted for deterministic iteration
using UserLabelSet = std::vector<std::pair<std::string, UserLabels>>;

const UserLabels* find_labels(const UserLabelSet& set, const std::string& user_id);

// line-delimited {"user_id": ..., "points": [[lon, lat, t], ...]}
void write_trajectories_jsonl(const std::string& path, const std::vector<RawTrajectory>& trajs);
std::vector<RawTrajectory> read_trajectories_jsonl(const std::string& path);

// line-delimited {"user_id": ..., "is_commuter": ..., "subway_trip_count": ...}
void write_labels_jsonl(const std::string& path, const UserLabelSet& labels);
UserLabelSet read_labels_jsonl(const std::string& path);

}  // namespace raw::data

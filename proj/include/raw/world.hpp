#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "raw/region.hpp"
#include "raw/trajectory.hpp"

namespace raw::data {

// Day d is a weekday iff d % 7 < 5 (day 0 is a Monday); slot s of day d sits
// at t = d*86400 + s*900.
inline constexpr int kSlotsPerDay = 96;

struct SyntheticWorldConfig {
  double lon_min = 116.20, lat_min = 39.80;
  double lon_max = 116.55, lat_max = 40.05;
  int n_users = 200;
  int n_days = 1;
  double commuter_fraction = 0.5;
  double speed_m_per_step = 6000.0;  // travel distance covered per 15-min step
  double noise_sigma_m = 150.0;      // base-station style positional deviation
  uint64_t rng_seed = 0;
  std::vector<geo::LonLat> subway_stations;                // may be empty (no subway legs)
  std::map<std::string, std::array<int, kNumPoiTypes>> poi_table;  // optional per-region override
  int region_grid = 12;  // regions form a region_grid x region_grid partition of the bbox

  void validate() const;
};

// Generator-known ground truth per user; feeds labels and tests, never the
// exported data files.
struct UserTruth {
  std::string user_id;
  bool is_commuter = false;
  bool uses_subway = false;
  geo::LonLat home = {0.0, 0.0};
  geo::LonLat work = {0.0, 0.0};  // commuters only
  double car_affinity = 0.0;      // in (0,1), grows with home distance from the bbox center
};

struct SyntheticWorld {
  std::vector<RawTrajectory> trajectories;  // one per user, jittered timestamps
  UserLabelSet labels;
  std::vector<Region> regions;
  std::vector<UserTruth> truth;  // aligned with trajectories
};

// Deterministic pure function of cfg. Commuters run a home->work->home loop
// on every weekday; non-commuters make anchored excursions. Subway legs are
// routed station-to-station and counted into subway_trip_count.
SyntheticWorld generate_synthetic_world(const SyntheticWorldConfig& cfg);

// evenly spaced k x k interior lattice, a reasonable default station layout
std::vector<geo::LonLat> default_stations(const SyntheticWorldConfig& cfg, int k = 3);

}  // namespace raw::data

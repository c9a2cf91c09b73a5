#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "raw/geo.hpp"
#include "raw/trajectory.hpp"

namespace raw::data {

inline constexpr int kNumPoiTypes = 14;

inline constexpr std::array<const char*, kNumPoiTypes> kPoiTypeNames = {
    "residence", "office",      "school", "hospital", "shopping", "restaurant", "park",
    "gym",       "supermarket", "hotel",  "bank",     "cinema",   "transit",    "museum"};

struct Region {
  enum class Kind { polygon, circle };

  std::string region_id;
  Kind kind = Kind::polygon;
  std::vector<geo::LonLat> ring;  // closed (first == last) when kind == polygon
  geo::LonLat center = {0.0, 0.0};
  double radius_m = 0.0;  // kind == circle

  std::array<int, kNumPoiTypes> poi_counts{};
  int car_service_count = 0;

  void validate() const;
  geo::LonLat centroid() const;
  bool contains(const geo::LonLat& p) const;
  // distance from p to the region boundary (polygon) or center-circle edge
  double distance_m(const geo::LonLat& p) const;
};

// True iff any grid point of traj with time in [t0, t1) lies inside the
// region or within proximity_m of it. Monotone in proximity_m.
bool region_membership(const GriddedTrajectory& traj, const Region& region, int64_t t0, int64_t t1,
                       double proximity_m);

// GeoJSON FeatureCollection; properties carry region_id, poi_counts (by
// type name) and car_service_count.
void write_regions_geojson(const std::string& path, const std::vector<Region>& regions);
std::vector<Region> read_regions_geojson(const std::string& path);

}  // namespace raw::data

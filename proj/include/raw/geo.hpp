#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace raw::geo {

using LonLat = std::array<double, 2>;  // {lon, lat} degrees, WGS84

inline constexpr double kEarthRadiusM = 6371008.8;
inline constexpr double kMetersPerDegLat = 111194.92664455873;  // pi * R / 180
inline constexpr double kDegToRad = 0.017453292519943295;

double haversine_m(const LonLat& a, const LonLat& b);

inline double meters_per_deg_lon(double lat_deg) {
  return kMetersPerDegLat * std::cos(lat_deg * kDegToRad);
}

// even-odd rule; ring must be closed (first == last)
bool point_in_ring(const LonLat& p, const std::vector<LonLat>& ring);

bool ring_self_intersects(const std::vector<LonLat>& ring);

// local equirectangular approximation, adequate at city scale
double point_to_segment_m(const LonLat& p, const LonLat& a, const LonLat& b);

double min_distance_to_ring_m(const LonLat& p, const std::vector<LonLat>& ring);

}  // namespace raw::geo

#include "raw/geo.hpp"

#include <algorithm>
#include <limits>

namespace raw::geo {

double haversine_m(const LonLat& a, const LonLat& b) {
  const double lat1 = a[1] * kDegToRad, lat2 = b[1] * kDegToRad;
  const double dlat = (b[1] - a[1]) * kDegToRad;
  const double dlon = (b[0] - a[0]) * kDegToRad;
  const double s1 = std::sin(dlat * 0.5), s2 = std::sin(dlon * 0.5);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

bool point_in_ring(const LonLat& p, const std::vector<LonLat>& ring) {
  bool inside = false;
  const size_t n = ring.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = ring[i][0], yi = ring[i][1];
    const double xj = ring[j][0], yj = ring[j][1];
    const bool crosses = (yi > p[1]) != (yj > p[1]);
    if (crosses && p[0] < (xj - xi) * (p[1] - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

namespace {

int orientation(const LonLat& a, const LonLat& b, const LonLat& c) {
  const double v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool segments_cross(const LonLat& a, const LonLat& b, const LonLat& c, const LonLat& d) {
  // proper intersection only; shared endpoints of adjacent ring edges do not count
  return orientation(a, b, c) * orientation(a, b, d) < 0 &&
         orientation(c, d, a) * orientation(c, d, b) < 0;
}

}  // namespace

bool ring_self_intersects(const std::vector<LonLat>& ring) {
  if (ring.size() < 4) return false;
  const size_t n = ring.size() - 1;  // closed: last == first
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i || j == (i + 1) % n || (j + 1) % n == i) continue;
      if (segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1])) return true;
    }
  }
  return false;
}

double point_to_segment_m(const LonLat& p, const LonLat& a, const LonLat& b) {
  const double mlon = meters_per_deg_lon(p[1]);
  const double px = p[0] * mlon, py = p[1] * kMetersPerDegLat;
  const double ax = a[0] * mlon, ay = a[1] * kMetersPerDegLat;
  const double bx = b[0] * mlon, by = b[1] * kMetersPerDegLat;
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double cx = ax + t * dx, cy = ay + t * dy;
  return std::hypot(px - cx, py - cy);
}

double min_distance_to_ring_m(const LonLat& p, const std::vector<LonLat>& ring) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < ring.size(); ++i) {
    best = std::min(best, point_to_segment_m(p, ring[i], ring[i + 1]));
  }
  return best;
}

}  // namespace raw::geo

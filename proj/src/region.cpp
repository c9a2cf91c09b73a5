#include "raw/region.hpp"

#include <fstream>

#include <json.hpp>

namespace raw::data {

using nlohmann::json;

void Region::validate() const {
  if (kind == Kind::polygon) {
    if (ring.size() < 4) throw ValueError("region " + region_id + ": ring needs >= 4 vertices");
    if (ring.front() != ring.back()) {
      throw ValueError("region " + region_id + ": ring is not closed");
    }
    if (geo::ring_self_intersects(ring)) {
      throw ValueError("region " + region_id + ": ring self-intersects");
    }
  } else {
    if (radius_m <= 0.0) throw ValueError("region " + region_id + ": radius must be > 0");
  }
}

geo::LonLat Region::centroid() const {
  if (kind == Kind::circle) return center;
  double lon = 0.0, lat = 0.0;
  const size_t n = ring.size() - 1;  // skip duplicated closing vertex
  for (size_t i = 0; i < n; ++i) {
    lon += ring[i][0];
    lat += ring[i][1];
  }
  return {lon / static_cast<double>(n), lat / static_cast<double>(n)};
}

bool Region::contains(const geo::LonLat& p) const {
  if (kind == Kind::circle) return geo::haversine_m(p, center) <= radius_m;
  return geo::point_in_ring(p, ring);
}

double Region::distance_m(const geo::LonLat& p) const {
  if (kind == Kind::circle) {
    return std::max(0.0, geo::haversine_m(p, center) - radius_m);
  }
  return geo::min_distance_to_ring_m(p, ring);
}

bool region_membership(const GriddedTrajectory& traj, const Region& region, int64_t t0, int64_t t1,
                       double proximity_m) {
  if (t0 >= t1) throw ValueError("region_membership: empty window");
  for (size_t j = 0; j < traj.coords.size(); ++j) {
    const int64_t t = traj.time_at(j);
    if (t < t0 || t >= t1) continue;
    const auto& p = traj.coords[j];
    if (region.contains(p)) return true;
    if (region.distance_m(p) <= proximity_m) return true;
  }
  return false;
}

void write_regions_geojson(const std::string& path, const std::vector<Region>& regions) {
  json features = json::array();
  for (const auto& r : regions) {
    json geometry;
    if (r.kind == Region::Kind::polygon) {
      json ring = json::array();
      for (const auto& v : r.ring) ring.push_back({v[0], v[1]});
      geometry["type"] = "Polygon";
      geometry["coordinates"] = json::array({std::move(ring)});
    } else {
      geometry["type"] = "Point";
      geometry["coordinates"] = {r.center[0], r.center[1]};
    }
    json props;
    props["region_id"] = r.region_id;
    if (r.kind == Region::Kind::circle) props["radius_m"] = r.radius_m;
    json poi;
    for (int i = 0; i < kNumPoiTypes; ++i) poi[kPoiTypeNames[static_cast<size_t>(i)]] = r.poi_counts[static_cast<size_t>(i)];
    props["poi_counts"] = std::move(poi);
    props["car_service_count"] = r.car_service_count;
    features.push_back(
        {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(props)}});
  }
  json fc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << fc.dump(2) << "\n";
}

std::vector<Region> read_regions_geojson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json fc;
  try {
    in >> fc;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  std::vector<Region> out;
  for (const auto& f : fc.at("features")) {
    Region r;
    const auto& props = f.at("properties");
    r.region_id = props.at("region_id").get<std::string>();
    const auto& geom = f.at("geometry");
    const std::string type = geom.at("type").get<std::string>();
    if (type == "Polygon") {
      r.kind = Region::Kind::polygon;
      for (const auto& v : geom.at("coordinates").at(0)) {
        r.ring.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      }
    } else if (type == "Point") {
      r.kind = Region::Kind::circle;
      r.center = {geom.at("coordinates").at(0).get<double>(),
                  geom.at("coordinates").at(1).get<double>()};
      r.radius_m = props.at("radius_m").get<double>();
    } else {
      throw IoError(path + ": unsupported geometry type " + type);
    }
    if (props.contains("poi_counts")) {
      const auto& poi = props.at("poi_counts");
      for (int i = 0; i < kNumPoiTypes; ++i) {
        const char* name = kPoiTypeNames[static_cast<size_t>(i)];
        if (poi.contains(name)) r.poi_counts[static_cast<size_t>(i)] = poi.at(name).get<int>();
      }
    }
    if (props.contains("car_service_count")) {
      r.car_service_count = props.at("car_service_count").get<int>();
    }
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace raw::data

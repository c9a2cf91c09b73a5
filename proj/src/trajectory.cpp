#include "raw/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace raw::data {

using nlohmann::json;

void RawTrajectory::validate() const {
  if (points.size() < 2) {
    throw DataError("trajectory " + user_id + " has " + std::to_string(points.size()) +
                    " points, need >= 2");
  }
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 || p.lat > 90.0) {
      throw DataError("trajectory " + user_id + " point " + std::to_string(i) +
                      " outside WGS84 bounds");
    }
    if (i > 0 && points[i - 1].t >= p.t) {
      throw DataError("trajectory " + user_id + " timestamps not strictly increasing at index " +
                      std::to_string(i));
    }
  }
}

void NormalizationStats::validate() const {
  if (lon_scale <= 0.0 || lat_scale <= 0.0) throw ValueError("normalization scales must be > 0");
}

namespace {

geo::LonLat interp_at(const std::vector<GpsPoint>& pts, int64_t t) {
  if (t <= pts.front().t) return {pts.front().lon, pts.front().lat};
  if (t >= pts.back().t) return {pts.back().lon, pts.back().lat};
  // bracketing pair via binary search on timestamps
  size_t hi = static_cast<size_t>(
      std::upper_bound(pts.begin(), pts.end(), t,
                       [](int64_t v, const GpsPoint& p) { return v < p.t; }) -
      pts.begin());
  const GpsPoint& a = pts[hi - 1];
  const GpsPoint& b = pts[hi];
  if (t == a.t) return {a.lon, a.lat};
  const double w = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
  return {a.lon + w * (b.lon - a.lon), a.lat + w * (b.lat - a.lat)};
}

}  // namespace

GriddedTrajectory interpolate_to_grid(const RawTrajectory& raw, int64_t grid_start,
                                      int64_t n_steps) {
  raw.validate();
  if (grid_start % kGridStepS != 0) {
    throw ValueError("grid_start " + std::to_string(grid_start) + " is not a multiple of 900");
  }
  if (grid_start > raw.points.back().t) {
    throw ValueError("grid_start is after the trajectory's last point");
  }
  if (n_steps < 0) {
    n_steps = (raw.points.back().t - grid_start) / kGridStepS + 1;
  }
  GriddedTrajectory out;
  out.user_id = raw.user_id;
  out.start_t = grid_start;
  out.coords.reserve(static_cast<size_t>(n_steps));
  for (int64_t j = 0; j < n_steps; ++j) {
    out.coords.push_back(interp_at(raw.points, grid_start + j * kGridStepS));
  }
  return out;
}

geo::LonLat normalize_point(const geo::LonLat& p, const NormalizationStats& stats) {
  return {(p[0] - stats.lon_center) / stats.lon_scale, (p[1] - stats.lat_center) / stats.lat_scale};
}

geo::LonLat denormalize_point(const geo::LonLat& p, const NormalizationStats& stats) {
  return {p[0] * stats.lon_scale + stats.lon_center, p[1] * stats.lat_scale + stats.lat_center};
}

std::vector<geo::LonLat> normalize(const GriddedTrajectory& traj, const NormalizationStats& stats) {
  stats.validate();
  std::vector<geo::LonLat> out;
  out.reserve(traj.coords.size());
  for (const auto& c : traj.coords) out.push_back(normalize_point(c, stats));
  return out;
}

NormalizationStats fit_stats(const std::vector<GriddedTrajectory>& dataset) {
  double lon_min = 1e18, lon_max = -1e18, lat_min = 1e18, lat_max = -1e18;
  bool any = false;
  for (const auto& t : dataset) {
    for (const auto& c : t.coords) {
      lon_min = std::min(lon_min, c[0]);
      lon_max = std::max(lon_max, c[0]);
      lat_min = std::min(lat_min, c[1]);
      lat_max = std::max(lat_max, c[1]);
      any = true;
    }
  }
  if (!any) throw DataError("fit_stats on an empty dataset");
  NormalizationStats s;
  s.lon_center = 0.5 * (lon_min + lon_max);
  s.lat_center = 0.5 * (lat_min + lat_max);
  s.lon_scale = std::max(0.5 * (lon_max - lon_min), 1e-6);
  s.lat_scale = std::max(0.5 * (lat_max - lat_min), 1e-6);
  return s;
}

GriddedTrajectory gridded_from_exact(const RawTrajectory& raw) {
  raw.validate();
  if (raw.points.front().t % kGridStepS != 0) {
    throw DataError("trajectory " + raw.user_id + " does not start on the 900 s grid");
  }
  GriddedTrajectory out;
  out.user_id = raw.user_id;
  out.start_t = raw.points.front().t;
  out.coords.reserve(raw.points.size());
  for (size_t i = 0; i < raw.points.size(); ++i) {
    if (raw.points[i].t != out.start_t + static_cast<int64_t>(i) * kGridStepS) {
      throw DataError("trajectory " + raw.user_id + " is not on a uniform 900 s grid at index " +
                      std::to_string(i));
    }
    out.coords.push_back({raw.points[i].lon, raw.points[i].lat});
  }
  return out;
}

GriddedTrajectory slice_window(const GriddedTrajectory& traj, int64_t t0, int64_t t1) {
  if (t0 >= t1) throw ValueError("slice_window: empty window");
  GriddedTrajectory out;
  out.user_id = traj.user_id;
  const int64_t n = static_cast<int64_t>(traj.coords.size());
  int64_t j0 = (t0 - traj.start_t + kGridStepS - 1) / kGridStepS;  // ceil
  if (t0 <= traj.start_t) j0 = 0;
  int64_t j1 = (t1 - 1 - traj.start_t) / kGridStepS + 1;  // first index at/after t1
  j0 = std::clamp<int64_t>(j0, 0, n);
  j1 = std::clamp<int64_t>(j1, 0, n);
  out.start_t = traj.start_t + j0 * kGridStepS;
  for (int64_t j = j0; j < j1; ++j) out.coords.push_back(traj.coords[static_cast<size_t>(j)]);
  return out;
}

const UserLabels* find_labels(const UserLabelSet& set, const std::string& user_id) {
  auto it = std::lower_bound(set.begin(), set.end(), user_id,
                             [](const auto& kv, const std::string& k) { return kv.first < k; });
  if (it != set.end() && it->first == user_id) return &it->second;
  return nullptr;
}

void write_trajectories_jsonl(const std::string& path, const std::vector<RawTrajectory>& trajs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& t : trajs) {
    json rec;
    rec["user_id"] = t.user_id;
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back({p.lon, p.lat, p.t});
    rec["points"] = std::move(pts);
    out << rec.dump() << "\n";
  }
}

std::vector<RawTrajectory> read_trajectories_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<RawTrajectory> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    RawTrajectory t;
    t.user_id = rec.at("user_id").get<std::string>();
    for (const auto& p : rec.at("points")) {
      t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<int64_t>()});
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_labels_jsonl(const std::string& path, const UserLabelSet& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [user_id, lab] : labels) {
    json rec;
    rec["user_id"] = user_id;
    rec["is_commuter"] = lab.is_commuter;
    rec["subway_trip_count"] = lab.subway_trip_count;
    out << rec.dump() << "\n";
  }
}

UserLabelSet read_labels_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  UserLabelSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    UserLabels lab;
    lab.is_commuter = rec.at("is_commuter").get<bool>();
    lab.subway_trip_count = rec.at("subway_trip_count").get<int>();
    out.emplace_back(rec.at("user_id").get<std::string>(), lab);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace raw::data

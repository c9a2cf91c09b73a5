#include "raw/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "raw/train.hpp"
#include "raw/world.hpp"

namespace raw::eval {

using nlohmann::json;

std::vector<double> statics_features(const data::Region& region,
                                     const std::vector<data::GriddedTrajectory>& trajs,
                                     int64_t t0, int64_t t1) {
  std::vector<double> in_counts(96, 0.0), out_counts(96, 0.0);
  std::vector<std::set<std::string>> hourly_users(24);
  std::vector<double> hourly_points(24, 0.0);

  for (const auto& traj : trajs) {
    bool prev_inside = false;
    bool prev_valid = false;
    for (size_t j = 0; j < traj.coords.size(); ++j) {
      const int64_t t = traj.time_at(j);
      if (t < t0 || t >= t1) {
        prev_valid = false;
        continue;
      }
      const bool inside = region.contains(traj.coords[j]);
      const int slot = static_cast<int>((t % 86400) / data::kGridStepS);
      const int hour = slot / 4;
      if (prev_valid) {
        if (inside && !prev_inside) in_counts[static_cast<size_t>(slot)] += 1.0;
        if (!inside && prev_inside) out_counts[static_cast<size_t>(slot)] += 1.0;
      }
      if (inside) {
        hourly_users[static_cast<size_t>(hour)].insert(traj.user_id);
        hourly_points[static_cast<size_t>(hour)] += 1.0;
      }
      prev_inside = inside;
      prev_valid = true;
    }
  }

  std::vector<double> out;
  out.reserve(kStaticsDims);
  out.insert(out.end(), in_counts.begin(), in_counts.end());
  out.insert(out.end(), out_counts.begin(), out_counts.end());
  for (int h = 0; h < 24; ++h) out.push_back(static_cast<double>(hourly_users[static_cast<size_t>(h)].size()));
  for (int h = 0; h < 24; ++h) {
    const double users = static_cast<double>(hourly_users[static_cast<size_t>(h)].size());
    out.push_back(users > 0.0 ? hourly_points[static_cast<size_t>(h)] / users : 0.0);
  }
  return out;
}

std::string RolloutTable::to_text() const {
  std::ostringstream os;
  os << "Future";
  for (const auto& s : start_labels) os << "  " << s;
  os << "\n";
  char buf[64];
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    std::snprintf(buf, sizeof(buf), "%.2fh ", horizons[hi] * 0.25);
    os << buf;
    for (size_t si = 0; si < start_labels.size(); ++si) {
      if (counts[si][hi] > 0) {
        std::snprintf(buf, sizeof(buf), " %9.2f", mean_error_m[si][hi]);
      } else {
        std::snprintf(buf, sizeof(buf), " %9s", "-");
      }
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

RolloutTable rollout_error_table(const model::ModelParams& params,
                                 const data::NormalizationStats& stats,
                                 const std::vector<data::GriddedTrajectory>& trajs,
                                 const std::vector<int>& start_slots, int horizon,
                                 std::vector<RolloutPath>* paths_out) {
  if (horizon < 1) throw ValueError("rollout_error_table: horizon must be >= 1");
  RolloutTable table;
  table.horizons.resize(static_cast<size_t>(horizon));
  for (int h = 0; h < horizon; ++h) table.horizons[static_cast<size_t>(h)] = h + 1;
  for (int slot : start_slots) {
    const int sec = slot * 900;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:00", sec / 3600, (sec % 3600) / 60);
    table.start_labels.emplace_back(buf);
  }
  table.mean_error_m.assign(start_slots.size(), std::vector<double>(static_cast<size_t>(horizon), 0.0));
  table.counts.assign(start_slots.size(), std::vector<int>(static_cast<size_t>(horizon), 0));

  for (size_t si = 0; si < start_slots.size(); ++si) {
    const int slot = start_slots[si];
    for (const auto& traj : trajs) {
      if (traj.start_t % 86400 != 0) continue;  // prompts are built day-aligned
      if (slot < 2 || static_cast<size_t>(slot) >= traj.coords.size()) continue;
      const int avail = std::min<int>(horizon, static_cast<int>(traj.coords.size()) - slot);
      if (avail < 1) continue;
      if (slot + avail > params.cfg.max_seq_len) continue;

      data::GriddedTrajectory prompt;
      prompt.user_id = traj.user_id;
      prompt.start_t = traj.start_t;
      prompt.coords.assign(traj.coords.begin(), traj.coords.begin() + slot);
      const std::vector<geo::LonLat> pred = train::rollout(params, stats, prompt, avail);

      for (int h = 0; h < avail; ++h) {
        const double err = geo::haversine_m(pred[static_cast<size_t>(h)],
                                       traj.coords[static_cast<size_t>(slot + h)]);
        table.mean_error_m[si][static_cast<size_t>(h)] += err;
        table.counts[si][static_cast<size_t>(h)] += 1;
      }
      if (paths_out) {
        RolloutPath rp;
        rp.user_id = traj.user_id;
        rp.start_label = table.start_labels[si];
        rp.predicted = pred;
        rp.truth.assign(traj.coords.begin() + slot, traj.coords.begin() + slot + avail);
        paths_out->push_back(std::move(rp));
      }
    }
  }

  for (size_t si = 0; si < table.mean_error_m.size(); ++si) {
    for (size_t h = 0; h < table.mean_error_m[si].size(); ++h) {
      if (table.counts[si][h] > 0) table.mean_error_m[si][h] /= table.counts[si][h];
    }
  }
  return table;
}

void write_rollout_paths_geojson(const std::string& path, const std::vector<RolloutPath>& paths) {
  json features = json::array();
  for (const auto& p : paths) {
    auto line = [](const std::vector<geo::LonLat>& pts) {
      json coords = json::array();
      for (const auto& c : pts) coords.push_back({c[0], c[1]});
      return json{{"type", "LineString"}, {"coordinates", std::move(coords)}};
    };
    features.push_back({{"type", "Feature"},
                        {"geometry", line(p.truth)},
                        {"properties",
                         {{"user_id", p.user_id}, {"start", p.start_label}, {"kind", "truth"}}}});
    features.push_back({{"type", "Feature"},
                        {"geometry", line(p.predicted)},
                        {"properties",
                         {{"user_id", p.user_id}, {"start", p.start_label}, {"kind", "predicted"}}}});
  }
  json fc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << fc.dump(2) << "\n";
}

}  // namespace raw::eval

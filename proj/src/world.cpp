#include "raw/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "raw/rng.hpp"

namespace raw::data {

void SyntheticWorldConfig::validate() const {
  if (!(lon_max > lon_min) || !(lat_max > lat_min)) {
    throw ConfigError("degenerate bbox");
  }
  if (n_users < 1) throw ConfigError("n_users must be >= 1");
  if (n_days < 1) throw ConfigError("n_days must be >= 1");
  if (commuter_fraction < 0.0 || commuter_fraction > 1.0) {
    throw ConfigError("commuter_fraction must be in [0,1]");
  }
  if (speed_m_per_step < 2000.0) throw ConfigError("speed_m_per_step must be >= 2000");
  if (noise_sigma_m < 0.0) throw ConfigError("noise_sigma_m must be >= 0");
  if (region_grid < 1) throw ConfigError("region_grid must be >= 1");
}

std::vector<geo::LonLat> default_stations(const SyntheticWorldConfig& cfg, int k) {
  std::vector<geo::LonLat> out;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double fx = (i + 1.0) / (k + 1.0), fy = (j + 1.0) / (k + 1.0);
      out.push_back({cfg.lon_min + fx * (cfg.lon_max - cfg.lon_min),
                     cfg.lat_min + fy * (cfg.lat_max - cfg.lat_min)});
    }
  }
  return out;
}

namespace {

struct Mover {
  const SyntheticWorldConfig& cfg;
  std::mt19937_64& rng;

  double mid_lat() const { return 0.5 * (cfg.lat_min + cfg.lat_max); }

  geo::LonLat random_point(double inset_frac) {
    const double dx = (cfg.lon_max - cfg.lon_min) * inset_frac;
    const double dy = (cfg.lat_max - cfg.lat_min) * inset_frac;
    std::uniform_real_distribution<double> ulon(cfg.lon_min + dx, cfg.lon_max - dx);
    std::uniform_real_distribution<double> ulat(cfg.lat_min + dy, cfg.lat_max - dy);
    const double lon = ulon(rng);
    const double lat = ulat(rng);
    return {lon, lat};
  }

  geo::LonLat offset_m(const geo::LonLat& p, double east_m, double north_m) const {
    return {p[0] + east_m / geo::meters_per_deg_lon(mid_lat()),
            p[1] + north_m / geo::kMetersPerDegLat};
  }

  geo::LonLat clamp_bbox(const geo::LonLat& p) const {
    return {std::clamp(p[0], cfg.lon_min, cfg.lon_max), std::clamp(p[1], cfg.lat_min, cfg.lat_max)};
  }

  // random point at haversine distance in [d_min, d_max] meters from base
  geo::LonLat point_near(const geo::LonLat& base, double d_min, double d_max) {
    std::uniform_real_distribution<double> uang(0.0, 2.0 * 3.141592653589793);
    std::uniform_real_distribution<double> udist(d_min, d_max);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double ang = uang(rng), d = udist(rng);
      geo::LonLat c = offset_m(base, d * std::cos(ang), d * std::sin(ang));
      if (c[0] >= cfg.lon_min && c[0] <= cfg.lon_max && c[1] >= cfg.lat_min && c[1] <= cfg.lat_max)
        return c;
    }
    return clamp_bbox(offset_m(base, d_min, 0.0));
  }

  geo::LonLat noisy(const geo::LonLat& p) {
    std::normal_distribution<double> n(0.0, cfg.noise_sigma_m);
    const double e = n(rng), no = n(rng);
    return clamp_bbox(offset_m(p, e, no));
  }

  size_t nearest_station(const geo::LonLat& p) const {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cfg.subway_stations.size(); ++i) {
      const double d = geo::haversine_m(p, cfg.subway_stations[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

double polyline_length_m(const std::vector<geo::LonLat>& path) {
  double len = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) len += geo::haversine_m(path[i], path[i + 1]);
  return len;
}

geo::LonLat polyline_at(const std::vector<geo::LonLat>& path, double frac) {
  const double target = std::clamp(frac, 0.0, 1.0) * polyline_length_m(path);
  double walked = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const double seg = geo::haversine_m(path[i], path[i + 1]);
    if (walked + seg >= target && seg > 0.0) {
      const double w = (target - walked) / seg;
      return {path[i][0] + w * (path[i + 1][0] - path[i][0]),
              path[i][1] + w * (path[i + 1][1] - path[i][1])};
    }
    walked += seg;
  }
  return path.back();
}

// A user's day as 96 base positions (before noise); subway legs bump *trips.
struct DayPlan {
  std::vector<geo::LonLat> slots;

  explicit DayPlan(const geo::LonLat& anchor) : slots(kSlotsPerDay, anchor) {}

  // travel occupying [dep, arr); slot arr holds the destination
  void travel(int dep, int arr, const std::vector<geo::LonLat>& path) {
    const int steps = arr - dep;
    for (int s = dep; s < arr && s < kSlotsPerDay; ++s) {
      if (s < 0) continue;
      slots[static_cast<size_t>(s)] = polyline_at(path, (s - dep + 1.0) / steps);
    }
  }

  void fill(int s0, int s1, const geo::LonLat& p) {
    for (int s = std::max(0, s0); s < std::min(s1, kSlotsPerDay); ++s)
      slots[static_cast<size_t>(s)] = p;
  }
};

}  // namespace

SyntheticWorld generate_synthetic_world(const SyntheticWorldConfig& cfg) {
  cfg.validate();
  SyntheticWorld world;

  const int n_commuters =
      std::min(cfg.n_users, static_cast<int>(std::lround(cfg.n_users * cfg.commuter_fraction)));
  const geo::LonLat bbox_center = {0.5 * (cfg.lon_min + cfg.lon_max),
                                   0.5 * (cfg.lat_min + cfg.lat_max)};
  const double half_diag_m =
      0.5 * geo::haversine_m({cfg.lon_min, cfg.lat_min}, {cfg.lon_max, cfg.lat_max});

  for (int u = 0; u < cfg.n_users; ++u) {
    auto rng = make_rng(cfg.rng_seed, "user", static_cast<uint64_t>(u));
    Mover mv{cfg, rng};

    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "u%05d", u);

    UserTruth truth;
    truth.user_id = idbuf;
    truth.is_commuter = u < n_commuters;
    truth.home = mv.random_point(0.05);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    truth.uses_subway = !cfg.subway_stations.empty() && u01(rng) < (truth.is_commuter ? 0.5 : 0.3);
    if (truth.is_commuter) truth.work = mv.point_near(truth.home, 3000.0, 12000.0);
    const double home_center_km = geo::haversine_m(truth.home, bbox_center) / 1000.0;
    const double r0_km = 0.35 * half_diag_m / 1000.0;
    truth.car_affinity = 1.0 / (1.0 + std::exp(-(home_center_km - r0_km) / 1.5));

    int subway_trips = 0;
    std::vector<geo::LonLat> base;
    base.reserve(static_cast<size_t>(cfg.n_days) * kSlotsPerDay);

    for (int day = 0; day < cfg.n_days; ++day) {
      const bool weekday = day % 7 < 5;
      DayPlan plan(truth.home);

      auto route = [&](const geo::LonLat& from, const geo::LonLat& to, bool allow_subway)
          -> std::pair<std::vector<geo::LonLat>, bool> {
        std::vector<geo::LonLat> path = {from, to};
        bool via_subway = false;
        if (allow_subway && truth.uses_subway && geo::haversine_m(from, to) > 2000.0) {
          const auto& sa = cfg.subway_stations[mv.nearest_station(from)];
          const auto& sb = cfg.subway_stations[mv.nearest_station(to)];
          if (sa != sb) {
            path = {from, sa, sb, to};
            via_subway = true;
          }
        }
        return {path, via_subway};
      };

      auto travel_steps = [&](const std::vector<geo::LonLat>& path) {
        return std::max<int>(1, static_cast<int>(
                                    std::ceil(polyline_length_m(path) / cfg.speed_m_per_step)));
      };

      if (truth.is_commuter && weekday) {
        // arrive at work by 08:30 (slot 34), leave at 17:30 (slot 70)
        auto [out_path, out_subway] = route(truth.home, truth.work, true);
        auto [back_path, back_subway] = route(truth.work, truth.home, true);
        const int steps_out = travel_steps(out_path);
        const int steps_back = travel_steps(back_path);
        const int arr = 34, dep_back = 70;
        plan.fill(arr, dep_back, truth.work);
        plan.travel(arr - steps_out, arr, out_path);
        plan.travel(dep_back, dep_back + steps_back, back_path);
        plan.fill(dep_back + steps_back, kSlotsPerDay, truth.home);
        if (out_subway) ++subway_trips;
        if (back_subway) ++subway_trips;
      } else {
        // anchored excursions, 0-3 on free days
        std::uniform_int_distribution<int> n_exc(0, weekday && !truth.is_commuter ? 3 : 2);
        std::uniform_real_distribution<double> uradius(1000.0, 8000.0);
        int cursor = 28;  // 07:00
        const int k = n_exc(rng);
        for (int e = 0; e < k; ++e) {
          const geo::LonLat target = mv.point_near(truth.home, 500.0, uradius(rng));
          auto [out_path, out_subway] = route(truth.home, target, true);
          auto [back_path, back_subway] = route(target, truth.home, true);
          const int steps_out = travel_steps(out_path);
          const int steps_back = travel_steps(back_path);
          std::uniform_int_distribution<int> udwell(2, 8);
          const int dwell = udwell(rng);
          std::uniform_int_distribution<int> udep(cursor, 80);
          const int dep = udep(rng);
          const int arr = dep + steps_out;
          const int dep_back = arr + dwell;
          const int home_at = dep_back + steps_back;
          if (home_at >= kSlotsPerDay - 1) break;
          plan.travel(dep, arr, out_path);
          plan.fill(arr, dep_back, target);
          plan.travel(dep_back, home_at, back_path);
          if (out_subway) ++subway_trips;
          if (back_subway) ++subway_trips;
          cursor = home_at + 1;
          if (cursor >= 78) break;
        }
      }

      for (int s = 0; s < kSlotsPerDay; ++s) base.push_back(plan.slots[static_cast<size_t>(s)]);
    }

    // emit with positional noise and timestamp jitter; first/last stay on the
    // grid so the 15-min interpolation covers every slot
    RawTrajectory traj;
    traj.user_id = truth.user_id;
    std::uniform_int_distribution<int64_t> jitter(-200, 200);
    const int64_t total = static_cast<int64_t>(base.size());
    for (int64_t j = 0; j < total; ++j) {
      const geo::LonLat p = mv.noisy(base[static_cast<size_t>(j)]);
      int64_t t = j * kGridStepS;
      if (j != 0 && j != total - 1) t += jitter(rng);
      traj.points.push_back({p[0], p[1], t});
    }
    traj.validate();

    world.trajectories.push_back(std::move(traj));
    world.labels.emplace_back(truth.user_id, UserLabels{truth.is_commuter, subway_trips});
    world.truth.push_back(std::move(truth));
  }

  // regions: region_grid x region_grid rectangular partition of the bbox
  const int g = cfg.region_grid;
  const double dlon = (cfg.lon_max - cfg.lon_min) / g;
  const double dlat = (cfg.lat_max - cfg.lat_min) / g;
  auto cell_of = [&](const geo::LonLat& p) -> int {
    int cx = std::min(g - 1, std::max(0, static_cast<int>((p[0] - cfg.lon_min) / dlon)));
    int cy = std::min(g - 1, std::max(0, static_cast<int>((p[1] - cfg.lat_min) / dlat)));
    return cy * g + cx;
  };

  // structural composition per cell
  std::vector<int> homes(static_cast<size_t>(g) * g, 0), works(static_cast<size_t>(g) * g, 0),
      stations(static_cast<size_t>(g) * g, 0);
  for (const auto& t : world.truth) {
    homes[static_cast<size_t>(cell_of(t.home))]++;
    if (t.is_commuter) works[static_cast<size_t>(cell_of(t.work))]++;
  }
  for (const auto& s : cfg.subway_stations) stations[static_cast<size_t>(cell_of(s))]++;

  // who walks where: sum of visitor car affinities per cell
  std::vector<double> affinity_sum(static_cast<size_t>(g) * g, 0.0);
  std::vector<int> visitor_count(static_cast<size_t>(g) * g, 0);
  for (size_t u = 0; u < world.trajectories.size(); ++u) {
    std::vector<char> seen(static_cast<size_t>(g) * g, 0);
    for (const auto& p : world.trajectories[u].points) {
      seen[static_cast<size_t>(cell_of({p.lon, p.lat}))] = 1;
    }
    for (size_t c = 0; c < seen.size(); ++c) {
      if (seen[c]) {
        affinity_sum[c] += world.truth[u].car_affinity;
        visitor_count[c]++;
      }
    }
  }

  auto region_rng = make_rng(cfg.rng_seed, "regions");
  for (int cy = 0; cy < g; ++cy) {
    for (int cx = 0; cx < g; ++cx) {
      const size_t c = static_cast<size_t>(cy) * g + cx;
      Region r;
      char idbuf[24];
      std::snprintf(idbuf, sizeof(idbuf), "r%02d_%02d", cy, cx);
      r.region_id = idbuf;
      r.kind = Region::Kind::polygon;
      const double x0 = cfg.lon_min + cx * dlon, x1 = cfg.lon_min + (cx + 1) * dlon;
      const double y0 = cfg.lat_min + cy * dlat, y1 = cfg.lat_min + (cy + 1) * dlat;
      r.ring = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};

      auto poisson = [&](double lambda) {
        std::poisson_distribution<int> d(std::max(lambda, 1e-9));
        return d(region_rng);
      };
      const double h = homes[c], w = works[c], st = stations[c], fl = visitor_count[c];
      r.poi_counts = {
          poisson(1.0 + 3.0 * h),         // residence
          poisson(0.5 + 3.0 * w),         // office
          poisson(0.3 + 0.8 * h),         // school
          poisson(0.2 + 0.3 * (h + w)),   // hospital
          poisson(0.3 + 0.10 * fl),       // shopping
          poisson(0.5 + 0.15 * fl),       // restaurant
          poisson(0.4 + 0.4 * h),         // park
          poisson(0.2 + 0.5 * w),         // gym
          poisson(0.3 + 0.6 * h),         // supermarket
          poisson(0.1 + 0.8 * w),         // hotel
          poisson(0.2 + 0.6 * w),         // bank
          poisson(0.1 + 0.05 * fl),       // cinema
          poisson(0.2 + 4.0 * st),        // transit
          poisson(0.05 + 0.1 * w),        // museum
      };
      std::uniform_real_distribution<double> ucar(0.0, 2.0);
      r.car_service_count =
          static_cast<int>(std::lround(1.5 * affinity_sum[c] + ucar(region_rng)));

      if (auto it = cfg.poi_table.find(r.region_id); it != cfg.poi_table.end()) {
        r.poi_counts = it->second;
      }
      r.validate();
      world.regions.push_back(std::move(r));
    }
  }

  std::sort(world.labels.begin(), world.labels.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return world;
}

}  // namespace raw::data

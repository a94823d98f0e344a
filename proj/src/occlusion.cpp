#include "ogrit/occlusion.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace ogrit {

namespace {

// Closed-set slack for membership tests, in metres of cross product.
constexpr double kSideTol = 1e-9;

}  // namespace

bool ShadowQuad::contains(const Vec2& p) const {
  const Vec2& a = quad[0];
  const Vec2& b = quad[1];
  const Vec2 d1 = a - apex;
  const Vec2 d2 = b - apex;
  const Vec2 q = p - apex;
  // quad is counter-clockwise, so the cone runs from the ray through b to the ray through a
  if (cross(d2, q) < -kSideTol * d2.norm()) return false;
  if (cross(q, d1) < -kSideTol * d1.norm()) return false;
  const Vec2 chord = b - a;
  const double side_p = cross(chord, p - a);
  const double side_e = cross(chord, apex - a);
  return side_p * side_e <= kSideTol * chord.norm() * std::abs(side_e);
}

std::vector<Interval> normalize_intervals(std::vector<Interval> intervals, double gap) {
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  std::vector<Interval> out;
  for (const auto& iv : intervals) {
    if (!out.empty() && iv.start <= out.back().end + gap) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

bool OccludedRegionSet::out_of_range(const Vec2& p) const {
  return distance(p, ego_position) > sensor_range;
}

bool OccludedRegionSet::occludes_ignoring(const Vec2& p, std::optional<VehicleId> self) const {
  if (out_of_range(p)) return true;
  for (const auto& shadow : shadows) {
    if (self && shadow.obstacle_index < bodies.size() && bodies[shadow.obstacle_index].owner == self) continue;
    if (shadow.contains(p)) return true;
  }
  for (const auto& body : bodies) {
    if (self && body.owner == self) continue;
    if (p.x < body.lo.x || p.y < body.lo.y || p.x > body.hi.x || p.y > body.hi.y) continue;
    if (point_in_polygon(body.polygon, p)) return true;
  }
  return false;
}

bool OccludedRegionSet::lane_range_occluded(LaneId lane, double s0, double s1) const {
  return first_occluded(lane, s0, s1).has_value();
}

std::optional<double> OccludedRegionSet::first_occluded(LaneId lane, double s0, double s1) const {
  const auto it = lane_occlusions.find(lane);
  if (it == lane_occlusions.end()) return std::nullopt;
  for (const auto& iv : it->second) {
    if (iv.end < s0 || iv.start > s1) continue;
    return std::max(iv.start, s0);
  }
  return std::nullopt;
}

std::optional<double> OccludedRegionSet::last_occluded(LaneId lane, double s0, double s1) const {
  const auto it = lane_occlusions.find(lane);
  if (it == lane_occlusions.end()) return std::nullopt;
  for (auto iv = it->second.rbegin(); iv != it->second.rend(); ++iv) {
    if (iv->end < s0 || iv->start > s1) continue;
    return std::min(iv->end, s1);
  }
  return std::nullopt;
}

ShadowQuad shadow_of(const Vec2& ego_centre, const ObstaclePolygon& obstacle, double sensor_range) {
  const auto& verts = obstacle.vertices;
  if (verts.size() < 3) throw GeometryError("obstacle has fewer than 3 vertices");
  if (sensor_range <= 0.0) throw GeometryError("sensor range must be positive");
  if (point_in_polygon(verts, ego_centre)) throw GeometryError("ego centre lies inside obstacle");

  double best_angle = -1.0;
  double best_dist = 0.0;
  std::size_t best_i = 0;
  std::size_t best_j = 0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec2 di = verts[i] - ego_centre;
    for (std::size_t j = i + 1; j < verts.size(); ++j) {
      const Vec2 dj = verts[j] - ego_centre;
      const double angle = std::atan2(std::abs(cross(di, dj)), dot(di, dj));
      const double dist = di.norm() + dj.norm();
      if (angle > best_angle + 1e-12 ||
          (std::abs(angle - best_angle) <= 1e-12 && dist < best_dist)) {
        best_angle = angle;
        best_dist = dist;
        best_i = i;
        best_j = j;
      }
    }
  }
  if (best_angle < 1e-9) throw GeometryError("obstacle subtends zero angle at ego");

  Vec2 v1 = verts[best_i];
  Vec2 v2 = verts[best_j];
  auto extend = [&](const Vec2& v) {
    const Vec2 d = v - ego_centre;
    const double len = d.norm();
    return ego_centre + d * (std::max(sensor_range, len) / len);
  };
  Vec2 v3 = extend(v1);
  Vec2 v4 = extend(v2);
  ShadowQuad out;
  out.apex = ego_centre;
  out.quad = {v1, v2, v4, v3};
  if (signed_area(out.quad) < 0.0) {
    std::swap(v1, v2);
    std::swap(v3, v4);
    out.quad = {v1, v2, v4, v3};
  }
  return out;
}

OccludedRegionSet compute_occluded_regions(const Frame& frame, const StaticScene& scene,
                                           VehicleId ego, double sensor_range,
                                           const OcclusionOptions& options) {
  const auto ego_it = frame.find(ego);
  if (ego_it == frame.end()) {
    throw ContractViolation("ego " + std::to_string(ego) + " not present in frame");
  }
  OccludedRegionSet out;
  out.ego = ego;
  out.ego_position = ego_it->second.position;
  out.sensor_range = sensor_range;

  std::vector<ObstaclePolygon> obstacles = scene.obstacles();
  std::vector<std::optional<VehicleId>> owners(obstacles.size());
  for (const auto& [id, state] : frame) {
    if (id == ego) continue;
    obstacles.push_back({state.footprint(), ObstacleKind::vehicle});
    owners.push_back(id);
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Polygon& poly = obstacles[i].vertices;
    // bounding box for quick rejection
    double lo_x = poly[0].x, lo_y = poly[0].y, hi_x = poly[0].x, hi_y = poly[0].y;
    for (const auto& v : poly) {
      lo_x = std::min(lo_x, v.x);
      lo_y = std::min(lo_y, v.y);
      hi_x = std::max(hi_x, v.x);
      hi_y = std::max(hi_y, v.y);
    }
    out.bodies.push_back({poly, owners[i], {lo_x, lo_y}, {hi_x, hi_y}});
    try {
      ShadowQuad shadow = shadow_of(out.ego_position, obstacles[i], sensor_range);
      shadow.obstacle_index = i;
      out.shadows.push_back(shadow);
    } catch (const GeometryError& e) {
      out.warnings.push_back("obstacle " + std::to_string(i) + " skipped: " + e.what());
    }
  }

  if (!options.with_lanes) return out;
  const double step = options.lane_step;
  for (const auto& lane : scene.lanes()) {
    const double len = lane.length();
    std::vector<Interval> runs;
    bool in_run = false;
    double run_start = 0.0;
    double last_s = 0.0;
    auto visit = [&](double s) {
      const bool occ = out.occludes(lane.midline.point_at(s));
      if (occ && !in_run) {
        in_run = true;
        run_start = s;
      } else if (!occ && in_run) {
        in_run = false;
        runs.push_back({run_start, last_s});
      }
      last_s = s;
    };
    for (int k = 0; k * step < len; ++k) visit(k * step);
    visit(len);
    if (in_run) runs.push_back({run_start, last_s});
    if (!runs.empty()) out.lane_occlusions[lane.id] = normalize_intervals(std::move(runs));
  }
  return out;
}

bool footprint_occluded(const VehicleState& state, const OccludedRegionSet& occlusions) {
  for (const auto& p : state.boundary_samples(0.2)) {
    if (!occlusions.occludes_ignoring(p, state.id)) return false;
  }
  return true;
}

Observation observable_vehicles(const Frame& raw_frame, VehicleId ego,
                                const OccludedRegionSet& occlusions) {
  const auto ego_it = raw_frame.find(ego);
  if (ego_it == raw_frame.end()) {
    throw ContractViolation("ego " + std::to_string(ego) + " not present in frame");
  }
  Observation obs;
  obs.time = ego_it->second.time;
  obs.ego = ego;
  for (const auto& [id, state] : raw_frame) {
    if (id == ego || !footprint_occluded(state, occlusions)) obs.visible.emplace(id, state);
  }
  return obs;
}

std::string occlusion_dataset_json(const Recording& recording, const StaticScene& scene,
                                   double sensor_range) {
  using nlohmann::json;
  json doc;
  doc["scenario_id"] = recording.scenario_id.empty() ? scene.scenario_id() : recording.scenario_id;
  doc["sensor_range_m"] = sensor_range;
  json frames = json::array();
  for (const auto& frame : recording.frames) {
    for (const auto& [ego, ego_state] : frame.states) {
      const auto occ = compute_occluded_regions(frame.states, scene, ego, sensor_range);
      json rec;
      rec["t"] = frame.time;
      rec["ego_id"] = ego;
      json quads = json::array();
      for (const auto& shadow : occ.shadows) {
        json q = json::array();
        for (const auto& v : shadow.quad) q.push_back({v.x, v.y});
        quads.push_back(std::move(q));
      }
      rec["shadow_quads"] = std::move(quads);
      json lanes = json::object();
      for (const auto& [lane, intervals] : occ.lane_occlusions) {
        json arr = json::array();
        for (const auto& iv : intervals) arr.push_back({iv.start, iv.end});
        lanes[std::to_string(lane)] = std::move(arr);
      }
      rec["lane_occlusions"] = std::move(lanes);
      const Observation obs = observable_vehicles(frame.states, ego, occ);
      json hidden = json::array();
      for (const auto& [id, state] : frame.states) {
        if (!obs.visible.contains(id)) hidden.push_back(id);
      }
      rec["occluded_vehicles"] = std::move(hidden);
      frames.push_back(std::move(rec));
    }
  }
  doc["frames"] = std::move(frames);
  return doc.dump();
}

void export_occlusion_dataset(const Recording& recording, const StaticScene& scene,
                              double sensor_range, const std::filesystem::path& out_path) {
  const std::string text = occlusion_dataset_json(recording, scene, sensor_range);
  std::ofstream out(out_path);
  if (!out) throw OgritError("cannot write " + out_path.string());
  out << text << '\n';
}

}  // namespace ogrit

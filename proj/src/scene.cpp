#include "ogrit/scene.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ogrit {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kGoalTypeNames = {
    "straight-on", "cross-road", "exit-left", "enter-left", "exit-right", "enter-right",
    "exit-roundabout"};

std::string lane_label(LaneId id) { return "lane " + std::to_string(id); }

Polyline points_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array of [x, y] pairs");
  Polyline out;
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError(what + ": malformed point " + p.dump());
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

json points_to_json(std::span<const Vec2> pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

std::string_view to_string(GoalType type) { return kGoalTypeNames[static_cast<std::size_t>(type)]; }

GoalType goal_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kGoalTypeNames.size(); ++i) {
    if (kGoalTypeNames[i] == name) return static_cast<GoalType>(i);
  }
  throw ParseError("unknown goal type '" + std::string(name) + "'");
}

StaticScene StaticScene::from_parts(std::string scenario_id, std::vector<Lane> lanes,
                                    std::vector<Junction> junctions,
                                    std::vector<ObstaclePolygon> obstacles) {
  StaticScene scene;
  scene.scenario_id_ = std::move(scenario_id);
  std::sort(lanes.begin(), lanes.end(), [](const Lane& a, const Lane& b) { return a.id < b.id; });
  scene.lanes_ = std::move(lanes);
  scene.junctions_ = std::move(junctions);
  scene.obstacles_ = std::move(obstacles);

  for (std::size_t i = 0; i < scene.lanes_.size(); ++i) {
    if (!scene.index_.emplace(scene.lanes_[i].id, i).second) {
      throw ValidationError("duplicate " + lane_label(scene.lanes_[i].id));
    }
  }
  std::set<int> junction_ids;
  for (const auto& j : scene.junctions_) junction_ids.insert(j.id);

  for (const auto& lane : scene.lanes_) {
    const std::string label = lane_label(lane.id);
    if (lane.midline.points().size() < 2) throw ValidationError(label + ": midline needs >= 2 points");
    if (lane.priority_rank < 0) throw ValidationError(label + ": negative priority_rank");
    for (LaneId ref : lane.successors) {
      if (!scene.has_lane(ref)) {
        throw ValidationError(label + ": successor " + std::to_string(ref) + " does not exist");
      }
    }
    for (LaneId ref : lane.predecessors) {
      if (!scene.has_lane(ref)) {
        throw ValidationError(label + ": predecessor " + std::to_string(ref) + " does not exist");
      }
    }
    if (lane.junction && !junction_ids.contains(*lane.junction)) {
      throw ValidationError(label + ": junction " + std::to_string(*lane.junction) + " does not exist");
    }
    if (!is_simple_polygon(lane.boundary)) {
      throw ValidationError(label + ": boundary polygon is degenerate or self-intersecting");
    }
    for (const auto& p : lane.midline.points()) {
      if (!point_in_polygon(lane.boundary, p, 1e-6)) {
        throw ValidationError(label + ": midline point outside boundary");
      }
    }
  }
  for (std::size_t i = 0; i < scene.obstacles_.size(); ++i) {
    const auto& ob = scene.obstacles_[i].vertices;
    if (ob.size() < 3 || !is_simple_polygon(ob)) {
      throw ValidationError("obstacle " + std::to_string(i) + ": degenerate or self-intersecting polygon");
    }
  }
  return scene;
}

const Lane& StaticScene::lane(LaneId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown " + lane_label(id));
  return lanes_[it->second];
}

std::vector<StaticScene::LaneMatch> StaticScene::lanes_at(const Vec2& position, double heading,
                                                          double tolerance) const {
  std::vector<LaneMatch> out;
  for (const auto& lane : lanes_) {
    const auto proj = lane.midline.project(position);
    if (proj.distance > tolerance && !point_in_polygon(lane.boundary, position)) continue;
    const double err = std::abs(wrap_angle(heading - proj.heading));
    // a lane driven against its direction is not a match
    if (err > std::numbers::pi / 2) continue;
    out.push_back({lane.id, proj, err});
  }
  std::sort(out.begin(), out.end(), [](const LaneMatch& a, const LaneMatch& b) {
    const double sa = a.projection.distance + 2.0 * a.heading_error;
    const double sb = b.projection.distance + 2.0 * b.heading_error;
    if (sa != sb) return sa < sb;
    return a.lane < b.lane;
  });
  return out;
}

bool StaticScene::operator==(const StaticScene& other) const {
  if (scenario_id_ != other.scenario_id_ || lanes_.size() != other.lanes_.size() ||
      junctions_.size() != other.junctions_.size() || obstacles_.size() != other.obstacles_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const Lane& a = lanes_[i];
    const Lane& b = other.lanes_[i];
    if (a.id != b.id || a.midline.points() != b.midline.points() || a.boundary != b.boundary ||
        a.successors != b.successors || a.predecessors != b.predecessors ||
        a.junction != b.junction || a.priority_rank != b.priority_rank ||
        a.roundabout != b.roundabout || a.slip_road != b.slip_road) {
      return false;
    }
  }
  for (std::size_t i = 0; i < junctions_.size(); ++i) {
    if (junctions_[i].id != other.junctions_[i].id) return false;
  }
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (obstacles_[i].vertices != other.obstacles_[i].vertices ||
        obstacles_[i].kind != other.obstacles_[i].kind) {
      return false;
    }
  }
  return true;
}

StaticScene scene_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene JSON: ") + e.what());
  }
  try {
    std::vector<Lane> lanes;
    for (const auto& jl : doc.at("lanes")) {
      Lane lane;
      lane.id = jl.at("id").get<LaneId>();
      const std::string label = lane_label(lane.id);
      Polyline mid = points_from_json(jl.at("midline"), label + " midline");
      if (mid.size() < 2) throw ValidationError(label + ": midline needs >= 2 points");
      lane.midline = PolylinePath(std::move(mid));
      lane.boundary = points_from_json(jl.at("boundary"), label + " boundary");
      lane.successors = jl.value("successors", std::vector<LaneId>{});
      lane.predecessors = jl.value("predecessors", std::vector<LaneId>{});
      if (jl.contains("junction") && !jl["junction"].is_null()) lane.junction = jl["junction"].get<int>();
      lane.priority_rank = jl.value("priority_rank", 0);
      lane.roundabout = jl.value("roundabout", false);
      lane.slip_road = jl.value("slip_road", false);
      lanes.push_back(std::move(lane));
    }
    std::vector<Junction> junctions;
    for (const auto& jj : doc.value("junctions", json::array())) {
      junctions.push_back({jj.is_object() ? jj.at("id").get<int>() : jj.get<int>()});
    }
    std::vector<ObstaclePolygon> obstacles;
    for (const auto& jo : doc.value("obstacles", json::array())) {
      obstacles.push_back({points_from_json(jo, "obstacle"), ObstacleKind::building});
    }
    return StaticScene::from_parts(doc.value("scenario_id", std::string{}), std::move(lanes),
                                   std::move(junctions), std::move(obstacles));
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene JSON: ") + e.what());
  }
}

StaticScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return scene_from_json_text(buf.str());
}

std::string scene_to_json_text(const StaticScene& scene) {
  json doc;
  doc["scenario_id"] = scene.scenario_id();
  json lanes = json::array();
  for (const auto& lane : scene.lanes()) {
    json jl;
    jl["id"] = lane.id;
    jl["midline"] = points_to_json(lane.midline.points());
    jl["boundary"] = points_to_json(lane.boundary);
    jl["successors"] = lane.successors;
    jl["predecessors"] = lane.predecessors;
    jl["junction"] = lane.junction ? json(*lane.junction) : json(nullptr);
    jl["priority_rank"] = lane.priority_rank;
    jl["roundabout"] = lane.roundabout;
    jl["slip_road"] = lane.slip_road;
    lanes.push_back(std::move(jl));
  }
  doc["lanes"] = std::move(lanes);
  json junctions = json::array();
  for (const auto& j : scene.junctions()) junctions.push_back({{"id", j.id}});
  doc["junctions"] = std::move(junctions);
  json obstacles = json::array();
  for (const auto& ob : scene.obstacles()) obstacles.push_back(points_to_json(ob.vertices));
  doc["obstacles"] = std::move(obstacles);
  return doc.dump(1);
}

void save_scene(const StaticScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write scene file " + path.string());
  out << scene_to_json_text(scene) << '\n';
}

VehicleState::VehicleState(VehicleId id_, double time_, Vec2 position_, double heading_,
                           double speed_, double acceleration_, double length_, double width_)
    : id(id_),
      time(time_),
      position(position_),
      heading(wrap_angle(heading_)),
      speed(speed_),
      acceleration(acceleration_),
      length(length_),
      width(width_) {
  if (speed < 0.0) throw ValidationError("vehicle " + std::to_string(id) + ": negative speed");
  if (length <= 0.0 || width <= 0.0) {
    throw ValidationError("vehicle " + std::to_string(id) + ": footprint must be positive");
  }
}

std::array<Vec2, 4> VehicleState::corners() const {
  const Vec2 fwd = unit_from_angle(heading) * (0.5 * length);
  const Vec2 left = Vec2{-std::sin(heading), std::cos(heading)} * (0.5 * width);
  return {position + fwd + left, position - fwd + left, position - fwd - left,
          position + fwd - left};
}

std::vector<Vec2> VehicleState::boundary_samples(double step) const {
  const auto c = corners();
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2& a = c[i];
    const Vec2& b = c[(i + 1) % 4];
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  return out;
}

Polygon VehicleState::footprint() const {
  const auto c = corners();
  return {c.begin(), c.end()};
}

}  // namespace ogrit

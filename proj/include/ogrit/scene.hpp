#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ogrit/errors.hpp"
#include "ogrit/geometry.hpp"

namespace ogrit {

using LaneId = int;
using VehicleId = int;

enum class GoalType {
  straight_on,
  cross_road,
  exit_left,
  enter_left,
  exit_right,
  enter_right,
  exit_roundabout,
};

inline constexpr std::array<GoalType, 7> kAllGoalTypes = {
    GoalType::straight_on, GoalType::cross_road,  GoalType::exit_left,      GoalType::enter_left,
    GoalType::exit_right,  GoalType::enter_right, GoalType::exit_roundabout};

std::string_view to_string(GoalType type);
GoalType goal_type_from_string(std::string_view name);

struct Lane {
  LaneId id{0};
  PolylinePath midline;
  Polygon boundary;
  std::vector<LaneId> successors;
  std::vector<LaneId> predecessors;
  std::optional<int> junction;
  int priority_rank{0};  // lower value = higher-priority road
  bool roundabout{false};
  bool slip_road{false};

  [[nodiscard]] double length() const { return midline.length(); }
  [[nodiscard]] bool in_junction() const { return junction.has_value(); }
};

struct Junction {
  int id{0};
};

enum class ObstacleKind { building, vehicle };

struct ObstaclePolygon {
  Polygon vertices;
  ObstacleKind kind{ObstacleKind::building};
};

/// Road layout and static obstacles. Immutable once built by from_parts/load_scene.
class StaticScene {
 public:
  StaticScene() = default;

  /// Validates every invariant; throws ValidationError naming the offending element.
  static StaticScene from_parts(std::string scenario_id, std::vector<Lane> lanes,
                                std::vector<Junction> junctions,
                                std::vector<ObstaclePolygon> obstacles);

  [[nodiscard]] const std::string& scenario_id() const { return scenario_id_; }
  [[nodiscard]] const std::vector<Lane>& lanes() const { return lanes_; }
  [[nodiscard]] const std::vector<Junction>& junctions() const { return junctions_; }
  [[nodiscard]] const std::vector<ObstaclePolygon>& obstacles() const { return obstacles_; }

  [[nodiscard]] const Lane& lane(LaneId id) const;
  [[nodiscard]] bool has_lane(LaneId id) const { return index_.contains(id); }

  struct LaneMatch {
    LaneId lane{0};
    PolylinePath::Projection projection;
    double heading_error{0.0};
  };

  /// Lanes whose boundary contains `position` (or whose midline lies within `tolerance`),
  /// best match first: smallest lateral offset plus heading misalignment.
  [[nodiscard]] std::vector<LaneMatch> lanes_at(const Vec2& position, double heading,
                                                double tolerance = 2.0) const;

  bool operator==(const StaticScene& other) const;

 private:
  std::string scenario_id_;
  std::vector<Lane> lanes_;
  std::vector<Junction> junctions_;
  std::vector<ObstaclePolygon> obstacles_;
  std::unordered_map<LaneId, std::size_t> index_;
};

StaticScene load_scene(const std::filesystem::path& path);
StaticScene scene_from_json_text(const std::string& text);
std::string scene_to_json_text(const StaticScene& scene);
void save_scene(const StaticScene& scene, const std::filesystem::path& path);

struct VehicleState {
  VehicleId id{0};
  double time{0.0};
  Vec2 position;
  double heading{0.0};  // (-pi, pi]
  double speed{0.0};
  double acceleration{0.0};
  double length{4.5};
  double width{1.8};

  VehicleState() = default;
  VehicleState(VehicleId id, double time, Vec2 position, double heading, double speed,
               double acceleration, double length = 4.5, double width = 1.8);

  /// Corners counter-clockwise starting front-left.
  [[nodiscard]] std::array<Vec2, 4> corners() const;
  /// Corners plus points along each edge every `step` metres.
  [[nodiscard]] std::vector<Vec2> boundary_samples(double step = 0.2) const;
  [[nodiscard]] Polygon footprint() const;
};

struct Observation {
  double time{0.0};
  VehicleId ego{0};
  std::map<VehicleId, VehicleState> visible;

  [[nodiscard]] const VehicleState* find(VehicleId id) const {
    const auto it = visible.find(id);
    return it == visible.end() ? nullptr : &it->second;
  }
};

/// Raw, unoccluded states of every vehicle present at one instant.
using Frame = std::map<VehicleId, VehicleState>;

struct Goal {
  Vec2 location;
  LaneId lane{0};
  double lane_s{0.0};  // arclength of the location along the lane midline
  GoalType type{GoalType::straight_on};

  bool operator==(const Goal&) const = default;
};

}  // namespace ogrit

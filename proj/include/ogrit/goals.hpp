#pragma once

#include <optional>
#include <vector>

#include "ogrit/scene.hpp"

namespace ogrit {

/// Lane transitions explored from the vehicle's current lane.
inline constexpr int kDefaultGoalDepth = 4;
/// Goals at junction or roundabout exits sit this far into the exit lane.
inline constexpr double kExitGoalOffset = 5.0;
/// |heading change| below this counts as going straight.
inline constexpr double kStraightThreshold = std::numbers::pi / 8.0;

struct GoalSet {
  VehicleId vehicle{0};
  double time{0.0};
  std::vector<Goal> goals;  // sorted by lane id, then arclength
};

/// A lane sequence from a vehicle's position to a goal.
struct GoalPath {
  std::vector<LaneId> lanes;
  double start_s{0.0};  // vehicle's projection on lanes.front()
  double length{0.0};   // arclength from the projection to the goal
};

GoalSet generate_goals(const VehicleState& state, const StaticScene& scene,
                       int max_depth = kDefaultGoalDepth);

GoalType assign_goal_type(LaneId current_lane, const Goal& goal, const StaticScene& scene,
                          int max_depth = kDefaultGoalDepth);

/// Shortest lane sequence (by arclength) from `from` to `to` using at most `max_depth`
/// transitions; no lane repeats.
std::optional<std::vector<LaneId>> shortest_lane_path(const StaticScene& scene, LaneId from,
                                                      LaneId to, int max_depth = kDefaultGoalDepth);

/// Goal path from the best-matching current lane that can reach the goal.
std::optional<GoalPath> find_goal_path(const VehicleState& state, const Goal& goal,
                                       const StaticScene& scene, int max_depth = kDefaultGoalDepth);

/// True once `state` is on the goal lane at or beyond the goal location.
bool reached_goal(const VehicleState& state, const Goal& goal, const StaticScene& scene);

/// Lane that the vehicle most plausibly occupies; throws OffMapError if none.
LaneId current_lane(const VehicleState& state, const StaticScene& scene);

}  // namespace ogrit

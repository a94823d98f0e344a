#include "ogrit/goals.hpp"

#include <algorithm>
#include <functional>

namespace ogrit {

namespace {

bool is_connector(const Lane& lane) { return lane.in_junction() || lane.roundabout || lane.slip_road; }

bool ends_goal_search(const Lane& prev, const Lane& lane) {
  return !is_connector(lane) && is_connector(prev);
}

Goal exit_goal(const Lane& lane) {
  const double s = std::min(kExitGoalOffset, lane.length());
  return {lane.midline.point_at(s), lane.id, s, GoalType::straight_on};
}

Goal lane_end_goal(const Lane& lane) {
  return {lane.midline.points().back(), lane.id, lane.length(), GoalType::straight_on};
}

double path_lanes_length(const StaticScene& scene, const std::vector<LaneId>& lanes) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < lanes.size(); ++i) total += scene.lane(lanes[i]).length();
  return total;
}

}  // namespace

std::optional<std::vector<LaneId>> shortest_lane_path(const StaticScene& scene, LaneId from,
                                                      LaneId to, int max_depth) {
  std::optional<std::vector<LaneId>> best;
  double best_len = std::numeric_limits<double>::infinity();
  std::vector<LaneId> path{from};
  std::function<void(double)> dfs = [&](double len) {
    const LaneId here = path.back();
    if (here == to) {
      if (len < best_len || (len == best_len && best && path < *best)) {
        best_len = len;
        best = path;
      }
      return;
    }
    if (static_cast<int>(path.size()) - 1 >= max_depth) return;
    const Lane& lane = scene.lane(here);
    for (LaneId next : lane.successors) {
      if (std::find(path.begin(), path.end(), next) != path.end()) continue;
      path.push_back(next);
      dfs(len + lane.length());
      path.pop_back();
    }
  };
  dfs(0.0);
  return best;
}

GoalType assign_goal_type(LaneId current, const Goal& goal, const StaticScene& scene, int max_depth) {
  const auto path = shortest_lane_path(scene, current, goal.lane, max_depth);
  if (!path) {
    throw UnreachableGoalError("goal on lane " + std::to_string(goal.lane) + " unreachable from lane " +
                               std::to_string(current));
  }
  const Lane& goal_lane = scene.lane(goal.lane);
  if (path->size() >= 2) {
    const Lane& before = scene.lane((*path)[path->size() - 2]);
    if (before.roundabout || before.slip_road) return GoalType::exit_roundabout;
  } else {
    // already on the exit lane
    for (LaneId p : goal_lane.predecessors) {
      if (scene.lane(p).roundabout || scene.lane(p).slip_road) return GoalType::exit_roundabout;
    }
  }

  double reference_heading = scene.lane(current).midline.heading_at(0.0);
  int entry_rank = scene.lane(current).priority_rank;
  std::optional<int> junction;
  for (std::size_t i = 0; i < path->size(); ++i) {
    const Lane& lane = scene.lane((*path)[i]);
    if (!lane.in_junction()) continue;
    junction = lane.junction;
    reference_heading = lane.midline.heading_at(0.0);
    if (i > 0) {
      entry_rank = scene.lane((*path)[i - 1]).priority_rank;
    } else if (!lane.predecessors.empty()) {
      entry_rank = scene.lane(lane.predecessors.front()).priority_rank;
    }
    break;
  }
  const double change = wrap_angle(goal_lane.midline.heading_at(goal.lane_s) - reference_heading);
  if (std::abs(change) < kStraightThreshold) {
    if (junction && goal_lane.priority_rank == entry_rank) {
      for (const auto& other : scene.lanes()) {
        if (other.junction == junction && other.priority_rank < entry_rank) return GoalType::cross_road;
      }
    }
    return GoalType::straight_on;
  }
  const bool enter = goal_lane.priority_rank < entry_rank;
  if (change > 0) return enter ? GoalType::enter_left : GoalType::exit_left;
  return enter ? GoalType::enter_right : GoalType::exit_right;
}

GoalSet generate_goals(const VehicleState& state, const StaticScene& scene, int max_depth) {
  if (max_depth < 1) throw ContractViolation("goal search depth must be >= 1");
  const auto matches = scene.lanes_at(state.position, state.heading, 2.0);
  if (matches.empty()) {
    throw OffMapError("vehicle " + std::to_string(state.id) + " is not on any lane");
  }
  std::vector<std::pair<Goal, LaneId>> found;
  for (const auto& match : matches) {
    const Lane& start = scene.lane(match.lane);
    const bool leaving_connector = !is_connector(start) &&
        std::any_of(start.predecessors.begin(), start.predecessors.end(),
                    [&](LaneId p) { return is_connector(scene.lane(p)); });
    if (leaving_connector && match.projection.s < exit_goal(start).lane_s) {
      found.emplace_back(exit_goal(start), start.id);
      continue;
    }
    if (start.successors.empty()) {
      found.emplace_back(lane_end_goal(start), start.id);
      continue;
    }
    std::vector<LaneId> path{start.id};
    std::function<void()> dfs = [&]() {
      const Lane& here = scene.lane(path.back());
      if (static_cast<int>(path.size()) - 1 >= max_depth) return;
      for (LaneId next_id : here.successors) {
        if (std::find(path.begin(), path.end(), next_id) != path.end()) continue;
        const Lane& next = scene.lane(next_id);
        if (ends_goal_search(here, next)) {
          found.emplace_back(exit_goal(next), start.id);
          continue;
        }
        if (next.successors.empty()) {
          found.emplace_back(lane_end_goal(next), start.id);
          continue;
        }
        path.push_back(next_id);
        dfs();
        path.pop_back();
      }
    };
    dfs();
  }

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.first.lane != b.first.lane) return a.first.lane < b.first.lane;
    return a.first.lane_s < b.first.lane_s;
  });
  GoalSet out;
  out.vehicle = state.id;
  out.time = state.time;
  for (auto& [goal, from] : found) {
    const bool duplicate = !out.goals.empty() && out.goals.back().lane == goal.lane &&
                           distance(out.goals.back().location, goal.location) < 1.0;
    if (duplicate) continue;
    goal.type = assign_goal_type(from, goal, scene, max_depth);
    out.goals.push_back(goal);
  }
  return out;
}

LaneId current_lane(const VehicleState& state, const StaticScene& scene) {
  const auto matches = scene.lanes_at(state.position, state.heading, 2.0);
  if (matches.empty()) throw OffMapError("vehicle " + std::to_string(state.id) + " is not on any lane");
  return matches.front().lane;
}

std::optional<GoalPath> find_goal_path(const VehicleState& state, const Goal& goal,
                                       const StaticScene& scene, int max_depth) {
  const auto matches = scene.lanes_at(state.position, state.heading, 2.0);
  for (const auto& match : matches) {
    const auto lanes = shortest_lane_path(scene, match.lane, goal.lane, max_depth);
    if (!lanes) continue;
    GoalPath path;
    path.lanes = *lanes;
    path.start_s = match.projection.s;
    if (lanes->size() == 1) {
      if (goal.lane_s + 1e-9 < match.projection.s) continue;
      path.length = goal.lane_s - match.projection.s;
    } else {
      path.length = path_lanes_length(scene, *lanes) - match.projection.s + goal.lane_s;
    }
    return path;
  }
  return std::nullopt;
}

bool reached_goal(const VehicleState& state, const Goal& goal, const StaticScene& scene) {
  const Lane& lane = scene.lane(goal.lane);
  const auto proj = lane.midline.project(state.position);
  if (proj.distance > 2.0) return false;
  if (std::abs(wrap_angle(state.heading - proj.heading)) > std::numbers::pi / 4) return false;
  return proj.s >= goal.lane_s - 0.5;
}

}  // namespace ogrit

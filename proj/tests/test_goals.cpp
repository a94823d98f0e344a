#include <algorithm>
#include <set>

#include "doctest.h"
#include "ogrit/goals.hpp"
#include "ogrit/synthetic.hpp"

using namespace ogrit;

namespace {

const double kPi = std::numbers::pi;

std::multiset<GoalType> types(const GoalSet& set) {
  std::multiset<GoalType> out;
  for (const auto& g : set.goals) out.insert(g.type);
  return out;
}

}  // namespace

TEST_CASE("T-junction goals from each approach") {
  const auto scene = make_t_junction_scene();
  SUBCASE("minor road") {
    const auto set = generate_goals(VehicleState(1, 0.0, {1.75, -50}, kPi / 2, 8.0, 0.0), scene);
    CHECK(types(set) == std::multiset<GoalType>{GoalType::enter_left, GoalType::enter_right});
    for (const auto& g : set.goals) {
      CHECK(g.lane_s == doctest::Approx(kExitGoalOffset));
      CHECK(g.location == scene.lane(g.lane).midline.point_at(g.lane_s));
    }
  }
  SUBCASE("major road eastbound") {
    const auto set = generate_goals(VehicleState(1, 0.0, {-50, -1.75}, 0.0, 8.0, 0.0), scene);
    CHECK(types(set) == std::multiset<GoalType>{GoalType::straight_on, GoalType::exit_right});
  }
  SUBCASE("major road westbound") {
    const auto set = generate_goals(VehicleState(1, 0.0, {50, 1.75}, kPi, 8.0, 0.0), scene);
    CHECK(types(set) == std::multiset<GoalType>{GoalType::straight_on, GoalType::exit_left});
  }
  SUBCASE("already past the junction") {
    const auto set = generate_goals(VehicleState(1, 0.0, {50, -1.75}, 0.0, 8.0, 0.0), scene);
    REQUIRE(set.goals.size() == 1);
    CHECK(set.goals[0].lane == 4);
    CHECK(set.goals[0].lane_s == doctest::Approx(scene.lane(4).length()));
  }
  CHECK_THROWS_AS(generate_goals(VehicleState(1, 0.0, {-50, 40}, 0.0, 8.0, 0.0), scene), OffMapError);
  CHECK_THROWS_AS(generate_goals(VehicleState(1, 0.0, {-50, -1.75}, 0.0, 8.0, 0.0), scene, 0), ContractViolation);
}

TEST_CASE("goal sets are sorted and duplicate free") {
  const auto scene = make_roundabout_scene();
  const auto set = generate_goals(VehicleState(1, 0.0, {80, 1.75}, kPi, 8.0, 0.0), scene, 6);
  for (std::size_t i = 1; i < set.goals.size(); ++i) {
    const auto& a = set.goals[i - 1];
    const auto& b = set.goals[i];
    CHECK((a.lane < b.lane || (a.lane == b.lane && a.lane_s <= b.lane_s)));
    CHECK_FALSE((a.lane == b.lane && distance(a.location, b.location) < 1.0));
  }
}

TEST_CASE("roundabout exits and search depth") {
  const auto scene = make_roundabout_scene();
  const VehicleState v(1, 0.0, {80, 1.75}, kPi, 8.0, 0.0);  // east arm, heading in
  const auto d4 = generate_goals(v, scene, 4);
  CHECK(d4.goals.size() == 3);  // the u-turn needs five transitions
  for (const auto& g : d4.goals) CHECK(g.type == GoalType::exit_roundabout);
  const auto d5 = generate_goals(v, scene, 5);
  CHECK(d5.goals.size() == 4);
  std::set<LaneId> exits;
  for (const auto& g : d5.goals) exits.insert(g.lane);
  CHECK(exits == std::set<LaneId>{5, 6, 7, 8});
}

TEST_CASE("vehicle that has left the ring keeps an exit goal") {
  const auto scene = make_roundabout_scene();
  const Lane& exit = scene.lane(6);
  SUBCASE("past the exit goal point") {
    const Vec2 p = exit.midline.point_at(10.0);
    const auto set = generate_goals(VehicleState(1, 0.0, p, exit.midline.heading_at(10.0), 6.0, 0.0), scene);
    REQUIRE(set.goals.size() == 1);
    CHECK(set.goals[0].lane == 6);
    CHECK(set.goals[0].type == GoalType::exit_roundabout);
    CHECK(set.goals[0].lane_s == doctest::Approx(exit.length()));
  }
  SUBCASE("still overlapping the ring") {
    const Vec2 p = exit.midline.point_at(1.0);
    const auto set = generate_goals(VehicleState(1, 0.0, p, exit.midline.heading_at(1.0), 6.0, 0.0), scene);
    bool has_six = false;
    for (const auto& g : set.goals) {
      CHECK(g.type == GoalType::exit_roundabout);
      if (g.lane == 6) {
        has_six = true;
        CHECK(g.lane_s == doctest::Approx(kExitGoalOffset));
      }
    }
    CHECK(has_six);
  }
}

TEST_CASE("goal typing and paths") {
  const auto scene = make_t_junction_scene();
  const Goal east{scene.lane(4).midline.point_at(5.0), 4, 5.0, GoalType::straight_on};
  CHECK(assign_goal_type(1, east, scene) == GoalType::straight_on);
  CHECK(assign_goal_type(5, east, scene) == GoalType::enter_right);
  CHECK_THROWS_AS(assign_goal_type(2, east, scene), UnreachableGoalError);

  const auto lanes = shortest_lane_path(scene, 1, 4);
  REQUIRE(lanes);
  CHECK(*lanes == std::vector<LaneId>{1, 7, 4});
  CHECK_FALSE(shortest_lane_path(scene, 1, 4, 1));

  const VehicleState v(1, 0.0, {-50, -1.75}, 0.0, 8.0, 0.0);
  const auto path = find_goal_path(v, east, scene);
  REQUIRE(path);
  CHECK(path->start_s == doctest::Approx(40.0));
  CHECK(path->length == doctest::Approx(40.0 + 20.0 + 5.0));
  CHECK(current_lane(v, scene) == 1);

  CHECK_FALSE(reached_goal(v, east, scene));
  CHECK(reached_goal(VehicleState(1, 0.0, {15.2, -1.75}, 0.0, 8.0, 0.0), east, scene));
  CHECK_FALSE(reached_goal(VehicleState(1, 0.0, {15.2, -1.75}, kPi, 8.0, 0.0), east, scene));
}

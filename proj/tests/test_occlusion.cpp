#include "doctest.h"
#include "fixtures.hpp"
#include "ogrit/occlusion.hpp"
#include "ogrit/synthetic.hpp"

using namespace ogrit;

TEST_CASE("shadow of a box seen head on") {
  const ObstaclePolygon box{{{10, -1}, {12, -1}, {12, 1}, {10, 1}}, ObstacleKind::building};
  const auto s = shadow_of({0, 0}, box, 100.0);
  CHECK(signed_area(Polygon(s.quad.begin(), s.quad.end())) > 0.0);
  // widest pair is the near corners
  CHECK(std::min(s.near_a().x, s.near_b().x) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(s.contains({50, 0}));
  CHECK(s.contains({99, 4}));  // inside the cone, beyond the chord
  CHECK_FALSE(s.contains({50, 10}));
  CHECK_FALSE(s.contains({5, 0}));  // between ego and obstacle
  CHECK_THROWS_AS(shadow_of({11, 0}, box, 100.0), GeometryError);
  CHECK_THROWS_AS(shadow_of({0, 0}, {{{1, 1}, {2, 2}}, ObstacleKind::building}, 100.0), GeometryError);
}

TEST_CASE("interval normalisation") {
  const auto out = normalize_intervals({{5, 6}, {0, 1}, {1, 2}, {2.5, 3}});
  REQUIRE(out.size() == 3);
  CHECK(out[0] == Interval{0, 2});
  CHECK(out[1] == Interval{2.5, 3});
  CHECK(out[2] == Interval{5, 6});
  CHECK(normalize_intervals({{0, 1}, {1.05, 2}}, 0.1).size() == 1);
}

TEST_CASE("occluded regions agree with line of sight on random scenes") {
  const auto r = fixtures::compare_occlusion(2024, 60);
  INFO(r.first_failure);
  CHECK(r.points > 1000);
  CHECK(r.disagreements == 0);
}

TEST_CASE("T-junction buildings hide the major road from the minor approach") {
  const auto scene = make_t_junction_scene();
  Frame frame;
  frame[1] = VehicleState(1, 0.0, {1.75, -30}, std::numbers::pi / 2, 5.0, 0.0);   // minor road, far back
  frame[2] = VehicleState(2, 0.0, {60, 1.75}, std::numbers::pi, 10.0, 0.0);       // westbound on the major road
  frame[3] = VehicleState(3, 0.0, {1.75, -20}, std::numbers::pi / 2, 5.0, 0.0);   // directly ahead of ego
  const auto occ = compute_occluded_regions(frame, scene, 1);
  CHECK(occ.occludes({60, 1.75}));
  CHECK(footprint_occluded(frame[2], occ));
  CHECK_FALSE(footprint_occluded(frame[3], occ));
  // lane 3 (westbound approach) is hidden far from the junction
  CHECK(occ.lane_range_occluded(3, 0.0, 30.0));
  const auto seen = observable_vehicles(frame, 1, occ);
  CHECK(seen.ego == 1);
  CHECK(seen.find(3) != nullptr);
  CHECK(seen.find(2) == nullptr);
  CHECK(seen.find(1) != nullptr);  // ego always sees itself
  CHECK_THROWS_AS(compute_occluded_regions(frame, scene, 9), ContractViolation);
}

TEST_CASE("range limit and partial visibility") {
  const auto scene = make_t_junction_scene();
  Frame frame;
  frame[1] = VehicleState(1, 0.0, {-80, -1.75}, 0.0, 5.0, 0.0);
  frame[2] = VehicleState(2, 0.0, {30, -1.75}, 0.0, 5.0, 0.0);  // 110 m away
  frame[3] = VehicleState(3, 0.0, {19, -1.75}, 0.0, 5.0, 0.0);  // front bumper within range
  const auto occ = compute_occluded_regions(frame, scene, 1, 100.0);
  CHECK(occ.out_of_range({30, 0}));
  CHECK(footprint_occluded(frame[2], occ));
  CHECK_FALSE(footprint_occluded(frame[3], occ));
  // unlimited range with nothing in the way
  CHECK_FALSE(OccludedRegionSet::none().occludes({1e6, 1e6}));
}

TEST_CASE("occlusion dataset export is deterministic") {
  const auto data = generate_synthetic(ScenarioKind::t_junction, 1, 5, {.duration = 6.0});
  const auto a = occlusion_dataset_json(data.episodes[0], data.scene, 100.0);
  const auto b = occlusion_dataset_json(data.episodes[0], data.scene, 100.0);
  CHECK(a == b);
  CHECK(a.find("\"ego_id\"") != std::string::npos);
}

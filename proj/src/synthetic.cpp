#include "ogrit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "ogrit/features.hpp"

namespace ogrit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfWidth = 1.75;
constexpr double kBrake = 2.5;     // planned deceleration, m/s^2
constexpr double kMaxAccel = 2.0;  // m/s^2
constexpr double kMaxBrake = 6.0;  // m/s^2

double deg(double d) { return d * kPi / 180.0; }

// Points on a circular arc from angle a0 to a1 (either direction), endpoints included.
Polyline arc(Vec2 centre, double r, double a0, double a1, double step = deg(4.0)) {
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(a1 - a0) / step)) + 1);
  Polyline out;
  for (int i = 0; i < n; ++i) {
    const double a = a0 + (a1 - a0) * i / (n - 1);
    out.push_back(centre + unit_from_angle(a) * r);
  }
  return out;
}

Polyline line(Vec2 a, Vec2 b) { return {a, b}; }

Polyline join(Polyline a, const Polyline& b) {
  for (const auto& p : b) {
    if (a.empty() || distance(a.back(), p) > 1e-9) a.push_back(p);
  }
  return a;
}

Lane make_lane(LaneId id, Polyline points, std::vector<LaneId> successors, std::optional<int> junction,
               int rank, bool ring = false) {
  Lane lane;
  lane.id = id;
  lane.midline = PolylinePath(points);
  lane.boundary = corridor_polygon(points, kHalfWidth);
  lane.successors = std::move(successors);
  lane.junction = junction;
  lane.priority_rank = rank;
  lane.roundabout = ring;
  return lane;
}

void link_predecessors(std::vector<Lane>& lanes) {
  std::map<LaneId, Lane*> by_id;
  for (auto& l : lanes) by_id[l.id] = &l;
  for (const auto& l : lanes) {
    for (LaneId s : l.successors) by_id.at(s)->predecessors.push_back(l.id);
  }
  for (auto& l : lanes) std::sort(l.predecessors.begin(), l.predecessors.end());
}

Polygon box(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

// Roundabout geometry.
constexpr double kRing = 20.0;
constexpr double kTurn = 8.0;
constexpr double kArm = 90.0;  // radius where arms start

// Angle offset of the entry/exit nodes from the arm axis, for tangent turn arcs.
double node_offset() { return std::asin((kHalfWidth + kTurn) / (kRing + kTurn)); }

}  // namespace

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "t-junction") return ScenarioKind::t_junction;
  if (name == "roundabout" || name == "roundabout-4-exit") return ScenarioKind::roundabout;
  throw ValidationError("unknown scenario kind '" + name + "' (expected t-junction or roundabout)");
}

std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::t_junction ? "t-junction" : "roundabout";
}

StaticScene make_t_junction_scene() {
  const double h = kHalfWidth;
  std::vector<Lane> lanes;
  // approaches and exits
  lanes.push_back(make_lane(1, line({-90, -h}, {-10, -h}), {7, 9}, std::nullopt, 0));
  lanes.push_back(make_lane(2, line({-10, h}, {-90, h}), {}, std::nullopt, 0));
  lanes.push_back(make_lane(3, line({90, h}, {10, h}), {8, 10}, std::nullopt, 0));
  lanes.push_back(make_lane(4, line({10, -h}, {90, -h}), {}, std::nullopt, 0));
  lanes.push_back(make_lane(5, line({h, -90}, {h, -10}), {11, 12}, std::nullopt, 1));
  lanes.push_back(make_lane(6, line({-h, -10}, {-h, -90}), {}, std::nullopt, 1));
  // junction connectors
  lanes.push_back(make_lane(7, line({-10, -h}, {10, -h}), {4}, 0, 0));
  lanes.push_back(make_lane(8, line({10, h}, {-10, h}), {2}, 0, 0));
  lanes.push_back(make_lane(9, arc({-10, -10}, 10 - h, kPi / 2, 0), {6}, 0, 0));
  lanes.push_back(make_lane(10, arc({10, -10}, 10 + h, kPi / 2, kPi), {6}, 0, 0));
  lanes.push_back(make_lane(11, arc({10, -10}, 10 - h, kPi, kPi / 2), {4}, 0, 1));
  lanes.push_back(make_lane(12, arc({-10, -10}, 10 + h, 0, kPi / 2), {2}, 0, 1));
  link_predecessors(lanes);
  std::vector<ObstaclePolygon> obstacles = {
      {box(-45, -45, -9, -9), ObstacleKind::building},
      {box(9, -45, 45, -9), ObstacleKind::building},
  };
  return StaticScene::from_parts("t-junction", std::move(lanes), {{0}}, std::move(obstacles));
}

StaticScene make_roundabout_scene() {
  const double delta = node_offset();
  const double big = kRing + kTurn;
  std::vector<Lane> lanes;
  for (int k = 0; k < 4; ++k) {
    const double th = k * kPi / 2;
    const Vec2 u = unit_from_angle(th);
    const Vec2 tau = unit_from_angle(th + kPi / 2);
    const int next = (k + 1) % 4;
    // entry: straight along the arm, then a right-hand arc joining the ring at th + delta
    const Vec2 c_in = unit_from_angle(th + delta) * big;
    const Polyline entry_arc = arc(c_in, kTurn, th - kPi / 2, th + delta - kPi);
    lanes.push_back(make_lane(1 + k, join(line(u * kArm + tau * kHalfWidth, entry_arc.front()), entry_arc),
                              {9 + k}, std::nullopt, 1));
    // exit: leaves the ring at th - delta with a right-hand arc, then straight out
    const Vec2 c_out = unit_from_angle(th - delta) * big;
    const Polyline exit_arc = arc(c_out, kTurn, th - delta + kPi, th + kPi / 2);
    lanes.push_back(make_lane(5 + k, join(exit_arc, line(exit_arc.back(), u * kArm - tau * kHalfWidth)), {},
                              std::nullopt, 1));
    // ring lane from this arm's exit node to the next arm's exit node
    lanes.push_back(make_lane(9 + k, arc({0, 0}, kRing, th - delta, th + kPi / 2 - delta), {9 + next, 5 + next},
                              std::nullopt, 0, true));
  }
  std::sort(lanes.begin(), lanes.end(), [](const Lane& a, const Lane& b) { return a.id < b.id; });
  link_predecessors(lanes);
  std::vector<ObstaclePolygon> obstacles = {
      {box(-8, -8, 8, 8), ObstacleKind::building},
      {box(17, 17, 50, 50), ObstacleKind::building},
  };
  return StaticScene::from_parts("roundabout", std::move(lanes), {}, std::move(obstacles));
}

StaticScene make_scene(ScenarioKind kind) {
  return kind == ScenarioKind::t_junction ? make_t_junction_scene() : make_roundabout_scene();
}

namespace {

// A lane stretch on a vehicle's route.
struct RoutePiece {
  LaneId lane;
  double s_from;
  double s_to;
  double offset;  // route arclength at s_from
};

struct Route {
  std::vector<RoutePiece> pieces;
  PolylinePath path;
  double turn_side{0.0};       // lateral drift direction before the manoeuvre
  double drift_end{0.0};       // route arclength where the drift is complete
  std::vector<double> limits;  // speed limit per piece
};

Route build_route(const StaticScene& scene, const std::vector<LaneId>& lanes) {
  Route r;
  Polyline pts;
  double offset = 0.0;
  double s_from = 0.0;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const Lane& lane = scene.lane(lanes[i]);
    if (i > 0) s_from = lane.midline.project(scene.lane(lanes[i - 1]).midline.points().back()).s;
    const double s_to = lane.length();
    r.pieces.push_back({lane.id, s_from, s_to, offset});
    // resample the piece so the route polyline follows the lane closely
    const int n = std::max(2, static_cast<int>(std::ceil((s_to - s_from) / 1.0)) + 1);
    Polyline piece;
    for (int k = 0; k < n; ++k) piece.push_back(lane.midline.point_at(s_from + (s_to - s_from) * k / (n - 1)));
    pts = join(std::move(pts), piece);
    offset += s_to - s_from;
  }
  r.path = PolylinePath(pts);
  return r;
}

struct Driver {
  VehicleId id{0};
  Route route;
  double s{0.0};
  double v{0.0};
  double a{0.0};
  double cruise{10.0};
  double length{4.5};
  double width{1.8};
  std::vector<Conflict> conflicts;   // conflicts on the route
  std::vector<double> conflict_at;   // route arclength of each conflict point
  std::vector<double> stop_at;       // route arclength of the matching stop line

  [[nodiscard]] std::size_t piece_index(double at) const {
    for (std::size_t i = 0; i + 1 < route.pieces.size(); ++i) {
      if (at < route.pieces[i + 1].offset) return i;
    }
    return route.pieces.size() - 1;
  }
  [[nodiscard]] double lateral(double at) const {
    if (route.turn_side == 0.0) return 0.0;
    const double start = route.drift_end - 25.0;
    if (at <= start) return 0.0;
    const double k = std::min(1.0, (at - start) / 20.0);
    // drift back to the centre line once inside the manoeuvre
    const double back = at > route.drift_end ? std::max(0.0, 1.0 - (at - route.drift_end) / 8.0) : 1.0;
    return route.turn_side * 0.45 * k * back;
  }
  [[nodiscard]] double heading_at(double at) const {
    const double h = route.path.heading_at(std::min(at, route.path.length()));
    const double d = (lateral(at + 0.5) - lateral(at - 0.5));
    return wrap_angle(h + std::atan2(d, 1.0));
  }
  [[nodiscard]] Vec2 position() const {
    const double at = std::min(s, route.path.length());
    const double h = route.path.heading_at(at);
    return route.path.point_at(at) + unit_from_angle(h + kPi / 2) * lateral(at);
  }
  // Arclength along this route of a point on `lane` at `lane_s`, if the lane is on it.
  [[nodiscard]] std::optional<double> route_s(LaneId lane, double lane_s) const {
    for (const auto& p : route.pieces) {
      if (p.lane == lane && lane_s >= p.s_from - 1e-9 && lane_s <= p.s_to + 1e-9) return p.offset + lane_s - p.s_from;
    }
    return std::nullopt;
  }
  [[nodiscard]] std::pair<LaneId, double> lane_position() const {
    const auto& p = route.pieces[piece_index(s)];
    return {p.lane, p.s_from + std::min(s, route.path.length()) - p.offset};
  }
};

bool turning(const Lane& lane) {
  const double change = wrap_angle(lane.midline.heading_at(lane.length()) - lane.midline.heading_at(0.0));
  return std::abs(change) >= kStraightThreshold;
}

struct Spawn {
  LaneId lane;
  std::vector<std::pair<double, std::vector<LaneId>>> choices;  // probability, lane route
};

std::vector<Spawn> spawns_for(ScenarioKind kind) {
  if (kind == ScenarioKind::t_junction) {
    return {
        {1, {{0.55, {1, 7, 4}}, {0.45, {1, 9, 6}}}},
        {3, {{0.55, {3, 8, 2}}, {0.45, {3, 10, 6}}}},
        {5, {{0.5, {5, 11, 4}}, {0.5, {5, 12, 2}}}},
    };
  }
  std::vector<Spawn> out;
  for (int k = 0; k < 4; ++k) {
    Spawn sp{1 + k, {}};
    for (int m = 1; m <= 4; ++m) {
      std::vector<LaneId> lanes{1 + k};
      for (int j = 0; j < m; ++j) lanes.push_back(9 + (k + j) % 4);
      lanes.push_back(5 + (k + m) % 4);
      sp.choices.emplace_back(m == 4 ? 0.1 : 0.3, lanes);
    }
    out.push_back(std::move(sp));
  }
  return out;
}

class Simulator {
 public:
  Simulator(const StaticScene& scene, ScenarioKind kind, std::uint64_t seed, const SyntheticOptions& options)
      : scene_(scene), rng_(seed), options_(options), conflicts_(scene), spawns_(spawns_for(kind)) {}

  Recording run(const std::string& episode_id) {
    Recording rec;
    rec.scenario_id = scene_.scenario_id();
    rec.episode_id = episode_id;
    rec.frame_rate = options_.frame_rate;
    const double dt = 1.0 / options_.frame_rate;
    std::uniform_real_distribution<double> first(0.0, 6.0);
    for (std::size_t i = 0; i < spawns_.size(); ++i) next_spawn_.push_back(first(rng_));
    const int steps = static_cast<int>(std::lround(options_.duration * options_.frame_rate));
    for (int k = 0; k < steps; ++k) {
      const double t = k * dt;
      spawn(t);
      if (!drivers_.empty()) {
        TimedFrame frame;
        frame.time = t;
        for (const auto& d : drivers_) {
          frame.states.emplace(d.id, VehicleState(d.id, t, d.position(), d.heading_at(d.s), d.v, d.a, d.length,
                                                  d.width));
        }
        rec.frames.push_back(std::move(frame));
      }
      step(dt);
    }
    rec.validate();
    return rec;
  }

 private:
  void spawn(double t) {
    std::uniform_real_distribution<double> gap(4.0, 11.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < spawns_.size(); ++i) {
      if (t < next_spawn_[i] || t > options_.spawn_until) continue;
      const Spawn& sp = spawns_[i];
      const bool blocked = std::any_of(drivers_.begin(), drivers_.end(), [&](const Driver& d) {
        const auto [lane, s] = d.lane_position();
        return lane == sp.lane && s < 14.0;
      });
      if (blocked) {
        next_spawn_[i] = t + 1.0;
        continue;
      }
      next_spawn_[i] = t + gap(rng_);
      double pick = unit(rng_);
      const std::vector<LaneId>* lanes = &sp.choices.back().second;
      for (const auto& [p, route] : sp.choices) {
        if (pick < p) {
          lanes = &route;
          break;
        }
        pick -= p;
      }
      drivers_.push_back(make_driver(*lanes));
    }
  }

  Driver make_driver(const std::vector<LaneId>& lanes) {
    std::uniform_real_distribution<double> cruise(9.0, 12.0);
    std::uniform_real_distribution<double> turn(4.0, 6.0);
    std::uniform_real_distribution<double> len(4.2, 4.9);
    Driver d;
    d.id = next_id_++;
    d.route = build_route(scene_, lanes);
    d.cruise = cruise(rng_);
    d.length = len(rng_);
    d.width = 1.8;
    const double turn_speed = turn(rng_);
    for (const auto& p : d.route.pieces) {
      const Lane& lane = scene_.lane(p.lane);
      const bool slow = lane.roundabout || (lane.in_junction() && turning(lane)) || lane.slip_road;
      d.route.limits.push_back(slow ? turn_speed + (lane.roundabout ? 1.0 : 0.0) : d.cruise);
    }
    // lateral drift toward the manoeuvre before the first connector
    if (d.route.pieces.size() >= 2) {
      const Lane& connector = scene_.lane(d.route.pieces[1].lane);
      d.route.drift_end = d.route.pieces[1].offset;
      if (connector.in_junction()) {
        const double change = wrap_angle(connector.midline.heading_at(connector.length()) -
                                         connector.midline.heading_at(0.0));
        if (std::abs(change) >= kStraightThreshold) d.route.turn_side = change > 0 ? 1.0 : -1.0;
      } else if (connector.roundabout) {
        const std::size_t ring_lanes = d.route.pieces.size() - 2;
        d.route.turn_side = ring_lanes == 1 ? -1.0 : (ring_lanes >= 3 ? 1.0 : 0.0);
      }
    }
    for (std::size_t i = 0; i < d.route.pieces.size(); ++i) {
      const auto& piece = d.route.pieces[i];
      for (const auto& c : conflicts_.conflicts_of(piece.lane)) {
        d.conflicts.push_back(c);
        d.conflict_at.push_back(piece.offset + c.path_s - piece.s_from);
        const Lane& lane = scene_.lane(piece.lane);
        // junction lanes stop at their start; merges stop short of the ring edge
        const double line = lane.in_junction() ? piece.offset : piece.offset + (c.path_s - piece.s_from) - 2.5;
        d.stop_at.push_back(line - d.length / 2.0 - 0.5);
      }
    }
    d.v = std::min(d.cruise, d.route.limits.front()) * 0.9;
    return d;
  }

  // Speed the driver may have at arclength `s` given what lies ahead.
  double target_speed(const Driver& d) const {
    double v = d.route.limits[d.piece_index(d.s)];
    for (std::size_t i = d.piece_index(d.s) + 1; i < d.route.pieces.size(); ++i) {
      const double dist = d.route.pieces[i].offset - d.s;
      if (dist > 80.0) break;
      v = std::min(v, std::sqrt(d.route.limits[i] * d.route.limits[i] + 2.0 * kBrake * std::max(0.0, dist)));
    }
    // give way
    for (std::size_t c = 0; c < d.conflicts.size(); ++c) {
      const double stop = d.stop_at[c];
      if (d.s > stop + 0.3 || stop - d.s > 50.0) continue;
      if (must_yield(d, d.conflicts[c])) {
        v = std::min(v, std::sqrt(2.0 * kBrake * std::max(0.0, stop - d.s)));
      }
    }
    // follow the vehicle ahead
    for (const auto& o : drivers_) {
      if (o.id == d.id) continue;
      const auto [lane, lane_s] = o.lane_position();
      const auto at = d.route_s(lane, lane_s);
      if (!at) continue;
      const double ahead = *at - d.s;
      if (ahead <= 0.0 || ahead > 60.0) continue;
      const double gap = ahead - (o.length + d.length) / 2.0 - 2.0;
      v = std::min(v, std::max(0.0, gap / 1.2));
      v = std::min(v, std::sqrt(o.v * o.v + 2.0 * kBrake * std::max(0.0, gap)));
    }
    return std::max(0.0, v);
  }

  bool must_yield(const Driver& d, const Conflict& c) const {
    for (const auto& o : drivers_) {
      if (o.id == d.id) continue;
      const auto at = o.route_s(c.other_lane, c.other_s);
      if (!at) continue;
      const double dist = *at - o.s;
      if (dist < -(o.length / 2.0 + 2.0) || dist > 45.0) continue;
      if (dist <= 4.0 || dist / std::max(o.v, 2.0) < 4.5) return true;
    }
    return false;
  }

  void step(double dt) {
    std::vector<double> accel(drivers_.size());
    for (std::size_t i = 0; i < drivers_.size(); ++i) {
      const Driver& d = drivers_[i];
      accel[i] = std::clamp((target_speed(d) - d.v) / 0.6, -kMaxBrake, kMaxAccel);
    }
    for (std::size_t i = 0; i < drivers_.size(); ++i) {
      Driver& d = drivers_[i];
      const double v_new = std::max(0.0, d.v + accel[i] * dt);
      d.a = (v_new - d.v) / dt;
      d.s += (d.v + v_new) / 2.0 * dt;
      d.v = v_new;
    }
    std::erase_if(drivers_, [](const Driver& d) { return d.s >= d.route.path.length() - 0.05; });
  }

  const StaticScene& scene_;
  std::mt19937_64 rng_;
  SyntheticOptions options_;
  FeatureExtractor conflicts_;
  std::vector<Spawn> spawns_;
  std::vector<double> next_spawn_;
  std::vector<Driver> drivers_;
  VehicleId next_id_{1};
};

}  // namespace

SyntheticData generate_synthetic(ScenarioKind kind, int n_episodes, std::uint64_t seed,
                                 const SyntheticOptions& options) {
  if (n_episodes < 1) throw ValidationError("need at least one episode");
  SyntheticData out;
  out.scene = make_scene(kind);
  for (int e = 0; e < n_episodes; ++e) {
    char name[32];
    std::snprintf(name, sizeof(name), "episode_%03d", e);
    Simulator sim(out.scene, kind, seed * 1000003ULL + static_cast<std::uint64_t>(e), options);
    out.episodes.push_back(sim.run(name));
  }
  return out;
}

}  // namespace ogrit

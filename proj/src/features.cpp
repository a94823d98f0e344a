#include "ogrit/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ogrit {

namespace {

constexpr double kPi = std::numbers::pi;
// A visible vehicle resolves a scan region if it starts within this much of the first
// occluded point (lane sampling step plus slack).
constexpr double kResolveSlack = 0.3;
// An exit lane starting this close to the entry lane's end returns to the entry road.
constexpr double kUturnGap = 8.0;

FeatureInfo scalar(std::string_view name, double lo, double hi) {
  return {std::string(name), FeatureKind::scalar, lo, hi};
}
FeatureInfo binary(std::string_view name) { return {std::string(name), FeatureKind::binary, 0.0, 1.0}; }

bool is_ring(const Lane& lane) { return lane.roundabout; }

bool has_ring_successor(const StaticScene& scene, const Lane& lane) {
  if (is_ring(lane)) return false;
  return std::any_of(lane.successors.begin(), lane.successors.end(),
                     [&](LaneId s) { return is_ring(scene.lane(s)); });
}

double net_heading_change(const Lane& lane) {
  return wrap_angle(lane.midline.heading_at(lane.length()) - lane.midline.heading_at(0.0));
}

// Turn across a connector measured between the lanes it joins, so a coarsely sampled arc
// still reports the full turn.
double connector_heading_change(const StaticScene& scene, const Lane& lane) {
  double h0 = lane.midline.heading_at(0.0);
  double h1 = lane.midline.heading_at(lane.length());
  if (!lane.predecessors.empty()) {
    const Lane& in = scene.lane(lane.predecessors.front());
    if (!in.in_junction()) h0 = in.midline.heading_at(in.length());
  }
  if (!lane.successors.empty()) {
    const Lane& out = scene.lane(lane.successors.front());
    if (!out.in_junction()) h1 = out.midline.heading_at(0.0);
  }
  return wrap_angle(h1 - h0);
}

bool is_straight(const Lane& lane) { return std::abs(net_heading_change(lane)) < kStraightThreshold; }

// Traffic on `j` must give way to traffic on `k`.
bool yields(const Lane& j, const Lane& k) {
  if (k.priority_rank != j.priority_rank) return k.priority_rank < j.priority_rank;
  return !is_straight(j) && is_straight(k);
}

bool share_predecessor(const Lane& a, const Lane& b) {
  for (LaneId p : a.predecessors) {
    if (std::find(b.predecessors.begin(), b.predecessors.end(), p) != b.predecessors.end()) return true;
  }
  return false;
}

// First crossing of two midlines, as arclengths along each.
std::optional<std::pair<double, double>> first_crossing(const PolylinePath& a, const PolylinePath& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  const auto ca = a.cumulative();
  for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
    std::optional<double> best;
    for (std::size_t k = 0; k + 1 < pb.size(); ++k) {
      const auto t = segment_intersection_param(pa[i], pa[i + 1], pb[k], pb[k + 1]);
      if (t && (!best || *t < *best)) best = t;
    }
    if (best) {
      const double sa = ca[i] + *best * (ca[i + 1] - ca[i]);
      const double sb = b.project(a.point_at(sa)).s;
      return std::make_pair(sa, sb);
    }
  }
  return std::nullopt;
}

struct Segment {
  LaneId lane;
  double s0;
  double s1;
  double offset;  // distance from the reference point to s0 (ahead) or s1 (upstream)
};

// Walks `length` metres along the lane sequence starting at arclength `start` of lanes[0].
std::vector<Segment> forward_segments(const StaticScene& scene, const std::vector<LaneId>& lanes,
                                      double start, double length) {
  std::vector<Segment> out;
  double offset = 0.0;
  double s = start;
  for (LaneId id : lanes) {
    const double len = scene.lane(id).length();
    if (s < len) {
      const double s1 = std::min(len, s + (length - offset));
      out.push_back({id, s, s1, offset});
      offset += s1 - s;
      if (offset >= length - 1e-9) break;
    }
    s = std::max(0.0, s - len);
  }
  return out;
}

// Upstream region: `length` metres back from arclength `end` of `lane`, through every
// predecessor branch.
void upstream_segments(const StaticScene& scene, LaneId lane, double end, double offset, double length,
                       std::vector<Segment>& out, int depth = 0) {
  const double s0 = std::max(0.0, end - (length - offset));
  out.push_back({lane, s0, end, offset});
  const double reached = offset + (end - s0);
  if (reached >= length - 1e-9 || depth > 8) return;
  for (LaneId p : scene.lane(lane).predecessors) {
    upstream_segments(scene, p, scene.lane(p).length(), reached, length, out, depth + 1);
  }
}

// Arclength of `v` on `lane` if it drives along it within the corridor.
std::optional<double> along_lane(const Lane& lane, const VehicleState& v, double half_width) {
  const auto proj = lane.midline.project(v.position);
  if (proj.distance > half_width) return std::nullopt;
  if (std::abs(wrap_angle(v.heading - proj.heading)) > kPi / 2) return std::nullopt;
  return proj.s;
}

struct ScanResult {
  bool missing{false};
  double distance{0.0};
  double speed{0.0};
};

// Shared resolution rule for both scan regions: the nearest visible vehicle is known if
// it begins before the nearest occluded point.
ScanResult resolve_scan(std::optional<std::pair<double, double>> nearest_vehicle, double vehicle_half_length,
                        std::optional<double> nearest_occlusion, double max_distance) {
  ScanResult r;
  if (nearest_vehicle) {
    const double near_edge = nearest_vehicle->first - vehicle_half_length;
    if (!nearest_occlusion || near_edge <= *nearest_occlusion + kResolveSlack) {
      r.distance = std::clamp(nearest_vehicle->first, 0.0, max_distance);
      r.speed = nearest_vehicle->second;
      return r;
    }
  } else if (!nearest_occlusion) {
    r.distance = max_distance;
    r.speed = 0.0;
    return r;
  }
  r.missing = true;
  return r;
}

const Observation* observation_near(std::span<const Observation> history, double t) {
  const Observation* best = nullptr;
  for (const auto& obs : history) {
    if (!best || std::abs(obs.time - t) < std::abs(best->time - t)) best = &obs;
  }
  return best;
}

}  // namespace

std::string indicator_name(std::string_view base) { return std::string(base) + "-missing"; }

FeatureCatalog::FeatureCatalog(std::vector<FeatureInfo> always_known,
                               std::vector<FeatureInfo> possibly_missing)
    : n_always_(always_known.size()), n_missing_(possibly_missing.size()) {
  infos_ = std::move(always_known);
  for (auto& f : possibly_missing) infos_.push_back(f);
  for (std::size_t i = 0; i < n_missing_; ++i) {
    infos_.push_back(binary(indicator_name(infos_[n_always_ + i].name)));
  }
  for (std::size_t i = 0; i < infos_.size(); ++i) {
    if (!by_name_.emplace(infos_[i].name, i).second) {
      throw ValidationError("duplicate feature id '" + infos_[i].name + "'");
    }
  }
}

const FeatureCatalog& FeatureCatalog::standard() {
  static const FeatureCatalog catalog(
      {
          scalar(feature::angle_in_lane, -kPi, kPi),
          scalar(feature::angle_to_goal, -kPi, kPi),
          binary(feature::in_correct_lane),
          scalar(feature::path_to_goal_length, 0.0, 1000.0),
          scalar(feature::junction_heading_change, -2 * kPi, 2 * kPi),
          binary(feature::roundabout_uturn),
          binary(feature::roundabout_slip_road),
      },
      {
          {std::string(feature::roundabout_exit_number), FeatureKind::integer, 0.0, 8.0},
          scalar(feature::speed, 0.0, 60.0),
          scalar(feature::acceleration, -15.0, 15.0),
          scalar(feature::heading_change_1s, -kPi, kPi),
          scalar(feature::dist_vehicle_in_front, 0.0, 100.0),
          scalar(feature::speed_vehicle_in_front, 0.0, 60.0),
          scalar(feature::dist_oncoming, 0.0, 100.0),
          scalar(feature::speed_oncoming, 0.0, 60.0),
      });
  return catalog;
}

std::size_t FeatureCatalog::indicator_of(std::size_t f) const {
  if (!is_possibly_missing(f)) throw ContractViolation("feature " + std::to_string(f) + " has no indicator");
  return f + n_missing_;
}

std::size_t FeatureCatalog::base_of(std::size_t indicator) const {
  if (!is_indicator(indicator)) throw ContractViolation("feature " + std::to_string(indicator) + " is not an indicator");
  return indicator - n_missing_;
}

std::optional<std::size_t> FeatureCatalog::find(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t FeatureCatalog::index(std::string_view name) const {
  const auto f = find(name);
  if (!f) throw ValidationError("unknown feature '" + std::string(name) + "'");
  return *f;
}

bool FeatureCatalog::operator==(const FeatureCatalog& other) const {
  if (n_always_ != other.n_always_ || n_missing_ != other.n_missing_) return false;
  for (std::size_t i = 0; i < infos_.size(); ++i) {
    const auto& a = infos_[i];
    const auto& b = other.infos_[i];
    if (a.name != b.name || a.kind != b.kind || a.lower != b.lower || a.upper != b.upper) return false;
  }
  return true;
}

std::optional<double> FeatureVector::get(const FeatureCatalog& catalog, std::size_t f) const {
  if (catalog.is_indicator(f)) return indicators_.at(f - catalog.base_count()) ? 1.0 : 0.0;
  return base_.at(f);
}

FeatureVector assemble(BaseValues base, IndicatorValues indicators, const FeatureCatalog& catalog) {
  if (base.size() != catalog.base_count() || indicators.size() != catalog.missing_count()) {
    throw ValidationError("feature vector size does not match catalog");
  }
  for (std::size_t f = 0; f < base.size(); ++f) {
    const auto& name = catalog.name(f);
    if (catalog.is_always(f) && !base[f]) throw ValidationError("feature '" + name + "' must be known");
    if (catalog.is_possibly_missing(f)) {
      const bool flagged = indicators[f - catalog.always_count()];
      if (flagged && base[f]) {
        throw ValidationError("feature '" + name + "' has a value but its indicator is set");
      }
      if (!flagged && !base[f]) {
        throw ValidationError("feature '" + name + "' is missing but its indicator is not set");
      }
    }
    if (base[f] && !std::isfinite(*base[f])) throw ValidationError("feature '" + name + "' is not finite");
    if (base[f] && catalog.info(f).kind == FeatureKind::binary && *base[f] != 0.0 && *base[f] != 1.0) {
      throw ValidationError("binary feature '" + name + "' must be 0 or 1");
    }
  }
  FeatureVector x;
  x.base_ = std::move(base);
  x.indicators_ = std::move(indicators);
  return x;
}

FeatureExtractor::FeatureExtractor(const StaticScene& scene, FeatureSettings settings)
    : scene_(&scene), settings_(settings) {
  for (const auto& j : scene.lanes()) {
    auto& list = conflicts_[j.id];
    if (j.in_junction()) {
      for (const auto& k : scene.lanes()) {
        if (k.id == j.id || k.junction != j.junction || share_predecessor(j, k) || !yields(j, k)) continue;
        if (const auto c = first_crossing(j.midline, k.midline)) {
          list.push_back({j.id, c->first, k.id, c->second});
        }
      }
    }
    if (has_ring_successor(scene, j)) {
      for (LaneId r : j.successors) {
        const Lane& ring = scene.lane(r);
        if (!is_ring(ring)) continue;
        for (LaneId p : ring.predecessors) {
          const Lane& other = scene.lane(p);
          if (p != j.id && is_ring(other)) list.push_back({j.id, j.length(), p, other.length()});
        }
      }
    }
  }
}

const std::vector<Conflict>& FeatureExtractor::conflicts_of(LaneId lane) const {
  static const std::vector<Conflict> empty;
  const auto it = conflicts_.find(lane);
  return it == conflicts_.end() ? empty : it->second;
}

BaseValues FeatureExtractor::compute(std::span<const Observation> history, VehicleId target,
                                     const Goal& goal, const OccludedRegionSet& occlusions) const {
  const StaticScene& scene = *scene_;
  const FeatureCatalog& cat = FeatureCatalog::standard();
  if (history.empty()) throw ContractViolation("feature extraction needs a non-empty history");
  const Observation& now = history.back();
  const VehicleState* state = now.find(target);
  if (!state) throw ContractViolation("target " + std::to_string(target) + " not visible at latest frame");

  const auto matches = scene.lanes_at(state->position, state->heading, 2.0);
  if (matches.empty()) throw ContractViolation("target " + std::to_string(target) + " is off the map");
  const auto path = find_goal_path(*state, goal, scene, settings_.max_depth);
  if (!path) throw ContractViolation("goal on lane " + std::to_string(goal.lane) + " unreachable from target");

  BaseValues out(cat.base_count());
  auto set = [&](std::string_view name, std::optional<double> v) { out[cat.index(name)] = v; };

  const auto& best = matches.front();
  set(feature::angle_in_lane, wrap_angle(state->heading - best.projection.heading));
  set(feature::angle_to_goal, wrap_angle((goal.location - state->position).angle() - state->heading));
  set(feature::in_correct_lane, path->lanes.front() == best.lane ? 1.0 : 0.0);
  set(feature::path_to_goal_length, std::max(0.0, path->length));

  double junction_change = 0.0;
  bool slip = false;
  for (LaneId id : path->lanes) {
    const Lane& lane = scene.lane(id);
    if (lane.in_junction()) junction_change += connector_heading_change(scene, lane);
    slip = slip || lane.slip_road;
  }
  set(feature::junction_heading_change, junction_change);

  // Roundabout features apply to exit goals and goals reached from the ring or a slip road.
  const auto& lanes = path->lanes;
  const bool roundabout_goal =
      goal.type == GoalType::exit_roundabout ||
      (lanes.size() >= 2 && (scene.lane(lanes[lanes.size() - 2]).roundabout ||
                             scene.lane(lanes[lanes.size() - 2]).slip_road));
  set(feature::roundabout_slip_road, roundabout_goal && slip ? 1.0 : 0.0);
  if (!roundabout_goal) {
    set(feature::roundabout_uturn, 0.0);
    set(feature::roundabout_exit_number, 0.0);
  } else {
    // entry lane: on the path if the target has not entered yet, else from history
    std::optional<LaneId> entry;
    for (LaneId id : lanes) {
      const Lane& lane = scene.lane(id);
      if (is_ring(lane)) break;
      if (has_ring_successor(scene, lane) || lane.slip_road) entry = id;
    }
    bool entry_observed = entry.has_value();
    if (!entry) {
      for (auto it = history.rbegin(); it != history.rend() && !entry; ++it) {
        const VehicleState* past = it->find(target);
        if (!past) continue;
        for (const auto& m : scene.lanes_at(past->position, past->heading, 2.0)) {
          if (has_ring_successor(scene, scene.lane(m.lane))) {
            entry = m.lane;
            break;
          }
        }
      }
      entry_observed = entry.has_value();
    }
    if (!entry) {
      // assume the nearest upstream entry, for the u-turn test only
      LaneId ring = lanes.front();
      for (int guard = 0; guard < 64 && !entry; ++guard) {
        const Lane& r = scene.lane(ring);
        std::optional<LaneId> prev_ring;
        for (LaneId p : r.predecessors) {
          if (is_ring(scene.lane(p))) prev_ring = p;
          else if (has_ring_successor(scene, scene.lane(p))) entry = p;
        }
        if (!prev_ring) break;
        ring = *prev_ring;
      }
    }
    const Lane& goal_lane = scene.lane(goal.lane);
    const bool uturn = entry && distance(scene.lane(*entry).midline.points().front(),
                                         goal_lane.midline.points().back()) < kUturnGap;
    set(feature::roundabout_uturn, uturn ? 1.0 : 0.0);

    std::optional<double> exit_number;
    if (entry_observed || (settings_.reveal_all && entry)) {
      const auto full = shortest_lane_path(scene, *entry, goal.lane, 4 * settings_.max_depth);
      if (full) {
        int passed = 0;
        for (std::size_t i = 0; i + 2 < full->size(); ++i) {
          const Lane& lane = scene.lane((*full)[i]);
          if (!is_ring(lane)) continue;
          for (LaneId s : lane.successors) {
            if (!is_ring(scene.lane(s))) ++passed;
          }
        }
        exit_number = static_cast<double>(passed + 1);
      }
    }
    set(feature::roundabout_exit_number, exit_number);
  }

  // kinematics need the target at the sample one second earlier
  const double t = now.time;
  const Observation* before = observation_near(history, t - 1.0);
  const bool covered = before && std::abs(before->time - (t - 1.0)) < 0.05 + 1e-9;
  const VehicleState* prev = covered ? before->find(target) : nullptr;
  if (!prev && settings_.reveal_all) {
    for (const auto& obs : history) {
      if (obs.time < t - 1.0 - 1e-9) continue;
      if ((prev = obs.find(target))) break;
    }
  }
  set(feature::speed, prev ? std::optional<double>(state->speed) : std::nullopt);
  set(feature::acceleration, prev ? std::optional<double>(state->acceleration) : std::nullopt);
  bool seen_throughout = prev != nullptr;
  for (const auto& obs : history) {
    if (settings_.reveal_all) break;
    if (obs.time >= t - 1.0 - 1e-9 && obs.time <= t + 1e-9 && !obs.find(target)) seen_throughout = false;
  }
  set(feature::heading_change_1s, seen_throughout
                                      ? std::optional<double>(wrap_angle(state->heading - prev->heading))
                                      : std::nullopt);

  // vehicle in front: along the goal path, starting at the target's front bumper
  {
    const double front = state->length / 2.0;
    const auto segs = forward_segments(scene, lanes, path->start_s + front, settings_.scan_length);
    std::optional<std::pair<double, double>> nearest;
    double nearest_half = 0.0;
    for (const auto& [id, v] : now.visible) {
      if (id == target) continue;
      for (const auto& seg : segs) {
        const auto s = along_lane(scene.lane(seg.lane), v, settings_.lane_half_width);
        if (!s || *s < seg.s0 || *s > seg.s1) continue;
        const double d = front + seg.offset + (*s - seg.s0);
        if (!nearest || d < nearest->first) {
          nearest = std::make_pair(d, v.speed);
          nearest_half = v.length / 2.0;
        }
        break;
      }
    }
    std::optional<double> occluded;
    for (const auto& seg : segs) {
      if (const auto s = occlusions.first_occluded(seg.lane, seg.s0, seg.s1)) {
        occluded = front + seg.offset + (*s - seg.s0);
        break;
      }
    }
    const auto r = resolve_scan(nearest, nearest_half, occluded, settings_.max_distance);
    set(feature::dist_vehicle_in_front, r.missing ? std::nullopt : std::optional<double>(r.distance));
    set(feature::speed_vehicle_in_front, r.missing ? std::nullopt : std::optional<double>(r.speed));
  }

  // oncoming traffic: upstream of every conflict point still ahead of the target
  {
    std::optional<std::pair<double, double>> nearest;
    double nearest_half = 0.0;
    std::optional<double> occluded;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      for (const auto& c : conflicts_of(lanes[i])) {
        if (i == 0 && c.path_s < path->start_s) continue;
        std::vector<Segment> segs;
        upstream_segments(scene, c.other_lane, c.other_s, 0.0, settings_.scan_length, segs);
        for (const auto& seg : segs) {
          if (const auto s = occlusions.last_occluded(seg.lane, seg.s0, seg.s1)) {
            const double d = seg.offset + (seg.s1 - *s);
            if (!occluded || d < *occluded) occluded = d;
          }
        }
        for (const auto& [id, v] : now.visible) {
          if (id == target) continue;
          for (const auto& seg : segs) {
            const auto s = along_lane(scene.lane(seg.lane), v, settings_.lane_half_width);
            if (!s || *s < seg.s0 || *s > seg.s1) continue;
            const double d = seg.offset + (seg.s1 - *s);
            if (!nearest || d < nearest->first) {
              nearest = std::make_pair(d, v.speed);
              nearest_half = v.length / 2.0;
            }
            break;
          }
        }
      }
    }
    const auto r = resolve_scan(nearest, nearest_half, occluded, settings_.max_distance);
    set(feature::dist_oncoming, r.missing ? std::nullopt : std::optional<double>(r.distance));
    set(feature::speed_oncoming, r.missing ? std::nullopt : std::optional<double>(r.speed));
  }
  return out;
}

BaseValues FeatureExtractor::extract_base_features(std::span<const Observation> history, VehicleId target,
                                                   const Goal& goal,
                                                   const OccludedRegionSet& occlusions) const {
  return compute(history, target, goal, occlusions);
}

IndicatorValues FeatureExtractor::extract_indicators(const OccludedRegionSet& occlusions, VehicleId target,
                                                     const Goal& goal,
                                                     std::span<const Observation> history) const {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  const BaseValues base = compute(history, target, goal, occlusions);
  IndicatorValues out(cat.missing_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = !base[cat.always_count() + i].has_value();
  return out;
}

FeatureVector FeatureExtractor::extract(std::span<const Observation> history, VehicleId target,
                                        const Goal& goal, const OccludedRegionSet& occlusions) const {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  BaseValues base = compute(history, target, goal, occlusions);
  IndicatorValues ind(cat.missing_count());
  for (std::size_t i = 0; i < ind.size(); ++i) ind[i] = !base[cat.always_count() + i].has_value();
  return assemble(std::move(base), std::move(ind), cat);
}

BaseValues extract_base_features(std::span<const Observation> history, VehicleId target,
                                 const Goal& goal, const StaticScene& scene,
                                 const OccludedRegionSet& occlusions) {
  return FeatureExtractor(scene).extract_base_features(history, target, goal, occlusions);
}

IndicatorValues extract_indicators(const OccludedRegionSet& occlusions, VehicleId target,
                                   const Goal& goal, const StaticScene& scene,
                                   std::span<const Observation> history) {
  return FeatureExtractor(scene).extract_indicators(occlusions, target, goal, history);
}

}  // namespace ogrit

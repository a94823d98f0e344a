#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ogrit/recording.hpp"
#include "ogrit/scene.hpp"

namespace ogrit {

inline constexpr double kDefaultSensorRange = 100.0;

/// Area behind one obstacle as seen from the ego centre.
///
/// `quad` is (v1, v2, v4, v3) in counter-clockwise order: v1 and v2 are the obstacle
/// vertices spanning the widest angle at the ego, v3 and v4 their rays extended to the
/// sensor range. Membership tests use the cone between the two rays beyond the v1-v2
/// chord, which also covers the thin sliver between the quad's far edge and the range
/// circle.
struct ShadowQuad {
  std::array<Vec2, 4> quad;
  Vec2 apex;
  std::size_t obstacle_index{0};

  [[nodiscard]] const Vec2& near_a() const { return quad[0]; }
  [[nodiscard]] const Vec2& near_b() const { return quad[1]; }
  [[nodiscard]] bool contains(const Vec2& p) const;
};

struct Interval {
  double start{0.0};
  double end{0.0};
  bool operator==(const Interval&) const = default;
};

/// Merges overlapping or touching intervals; result sorted and pairwise disjoint.
std::vector<Interval> normalize_intervals(std::vector<Interval> intervals, double gap = 0.0);

class OccludedRegionSet {
 public:
  VehicleId ego{0};
  Vec2 ego_position;
  double sensor_range{std::numeric_limits<double>::infinity()};
  std::vector<ShadowQuad> shadows;
  // Obstacle bodies hide whatever lies inside them; `owner` marks vehicle footprints.
  struct Body {
    Polygon polygon;
    std::optional<VehicleId> owner;
    Vec2 lo, hi;  // bounding box
  };
  std::vector<Body> bodies;
  std::map<LaneId, std::vector<Interval>> lane_occlusions;
  std::vector<std::string> warnings;

  /// Nothing occluded and unlimited range.
  static OccludedRegionSet none() { return {}; }

  [[nodiscard]] bool out_of_range(const Vec2& p) const;
  [[nodiscard]] bool occludes(const Vec2& p) const { return occludes_ignoring(p, std::nullopt); }
  /// As `occludes`, but the body owned by `self` and its shadow hide nothing.
  [[nodiscard]] bool occludes_ignoring(const Vec2& p, std::optional<VehicleId> self) const;
  /// True if some occluded interval of `lane` intersects [s0, s1].
  [[nodiscard]] bool lane_range_occluded(LaneId lane, double s0, double s1) const;
  /// Smallest occluded arclength of `lane` inside [s0, s1], if any.
  [[nodiscard]] std::optional<double> first_occluded(LaneId lane, double s0, double s1) const;
  /// Largest occluded arclength of `lane` inside [s0, s1], if any.
  [[nodiscard]] std::optional<double> last_occluded(LaneId lane, double s0, double s1) const;
};

ShadowQuad shadow_of(const Vec2& ego_centre, const ObstaclePolygon& obstacle, double sensor_range);

struct OcclusionOptions {
  bool with_lanes{true};
  double lane_step{0.1};
};

OccludedRegionSet compute_occluded_regions(const Frame& frame, const StaticScene& scene,
                                           VehicleId ego, double sensor_range = kDefaultSensorRange,
                                           const OcclusionOptions& options = {});

/// A vehicle is hidden only if its whole footprint boundary lies in occluded space.
bool footprint_occluded(const VehicleState& state, const OccludedRegionSet& occlusions);

Observation observable_vehicles(const Frame& raw_frame, VehicleId ego,
                                const OccludedRegionSet& occlusions);

/// Writes the occlusion dataset JSON: one record per (frame, ego) pair.
void export_occlusion_dataset(const Recording& recording, const StaticScene& scene,
                              double sensor_range, const std::filesystem::path& out_path);
std::string occlusion_dataset_json(const Recording& recording, const StaticScene& scene,
                                   double sensor_range);

}  // namespace ogrit

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ogrit/goals.hpp"
#include "ogrit/occlusion.hpp"
#include "ogrit/scene.hpp"

namespace ogrit {

enum class FeatureKind { scalar, binary, integer };

struct FeatureInfo {
  std::string name;
  FeatureKind kind{FeatureKind::scalar};
  double lower{0.0};
  double upper{0.0};
};

/// Ordered feature ids. Index layout: always-known base features first, then the
/// possibly-missing base features, then one indicator per possibly-missing feature in
/// the same order.
class FeatureCatalog {
 public:
  FeatureCatalog(std::vector<FeatureInfo> always_known, std::vector<FeatureInfo> possibly_missing);

  /// The 7 + 8 base features and 8 indicators used for goal recognition.
  static const FeatureCatalog& standard();

  [[nodiscard]] std::size_t size() const { return infos_.size(); }
  [[nodiscard]] std::size_t always_count() const { return n_always_; }
  [[nodiscard]] std::size_t missing_count() const { return n_missing_; }
  [[nodiscard]] std::size_t base_count() const { return n_always_ + n_missing_; }

  [[nodiscard]] bool is_always(std::size_t f) const { return f < n_always_; }
  [[nodiscard]] bool is_possibly_missing(std::size_t f) const {
    return f >= n_always_ && f < n_always_ + n_missing_;
  }
  [[nodiscard]] bool is_indicator(std::size_t f) const { return f >= base_count() && f < size(); }

  /// Indicator for a possibly-missing feature.
  [[nodiscard]] std::size_t indicator_of(std::size_t f) const;
  /// Possibly-missing feature an indicator stands for.
  [[nodiscard]] std::size_t base_of(std::size_t indicator) const;

  [[nodiscard]] const FeatureInfo& info(std::size_t f) const { return infos_.at(f); }
  [[nodiscard]] const std::string& name(std::size_t f) const { return infos_.at(f).name; }
  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  [[nodiscard]] std::size_t index(std::string_view name) const;  // throws ValidationError

  bool operator==(const FeatureCatalog& other) const;

 private:
  std::vector<FeatureInfo> infos_;
  std::size_t n_always_{0};
  std::size_t n_missing_{0};
  std::unordered_map<std::string, std::size_t> by_name_;
};

std::string indicator_name(std::string_view base);

namespace feature {
inline constexpr std::string_view angle_in_lane = "angle-in-lane";
inline constexpr std::string_view angle_to_goal = "angle-to-goal";
inline constexpr std::string_view in_correct_lane = "in-correct-lane";
inline constexpr std::string_view path_to_goal_length = "path-to-goal-length";
inline constexpr std::string_view junction_heading_change = "junction-heading-change";
inline constexpr std::string_view roundabout_uturn = "roundabout-uturn";
inline constexpr std::string_view roundabout_slip_road = "roundabout-slip-road";
inline constexpr std::string_view roundabout_exit_number = "roundabout-exit-number";
inline constexpr std::string_view speed = "speed";
inline constexpr std::string_view acceleration = "acceleration";
inline constexpr std::string_view heading_change_1s = "heading-change-1-second";
inline constexpr std::string_view dist_vehicle_in_front = "distance-to-vehicle-in-front";
inline constexpr std::string_view speed_vehicle_in_front = "speed-of-vehicle-in-front";
inline constexpr std::string_view dist_oncoming = "distance-from-oncoming-vehicle";
inline constexpr std::string_view speed_oncoming = "speed-of-oncoming-vehicle";
}  // namespace feature

/// Base values in catalog order (size base_count); nullopt = missing.
using BaseValues = std::vector<std::optional<double>>;
/// Indicator values in catalog order (size missing_count).
using IndicatorValues = std::vector<bool>;

/// Feature input for one (vehicle, goal) pair. Invariant: a possibly-missing value is
/// absent exactly when its indicator is set.
class FeatureVector {
 public:
  FeatureVector() = default;

  [[nodiscard]] const BaseValues& base() const { return base_; }
  [[nodiscard]] const IndicatorValues& indicators() const { return indicators_; }

  /// Value of any catalog feature; indicators read as 0/1, missing values as nullopt.
  [[nodiscard]] std::optional<double> get(const FeatureCatalog& catalog, std::size_t f) const;
  [[nodiscard]] bool is_missing(std::size_t f) const { return f < base_.size() && !base_[f]; }

 private:
  friend FeatureVector assemble(BaseValues, IndicatorValues, const FeatureCatalog&);
  BaseValues base_;
  IndicatorValues indicators_;
};

/// Joins base values and indicators; throws ValidationError on any inconsistency.
FeatureVector assemble(BaseValues base, IndicatorValues indicators,
                       const FeatureCatalog& catalog = FeatureCatalog::standard());

struct FeatureSettings {
  int max_depth{kDefaultGoalDepth};
  double scan_length{30.0};  // metres scanned ahead of the target and upstream of conflicts
  double max_distance{100.0};  // sentinel for "no vehicle" distances
  double lane_half_width{2.0};
  // Full-information extraction for oracle models: kinematic features never go missing
  // (a heading change falls back to the earliest state within the last second).
  bool reveal_all{false};
};

/// A point where a lane on a goal path meets traffic it must give way to.
struct Conflict {
  LaneId path_lane{0};
  double path_s{0.0};
  LaneId other_lane{0};
  double other_s{0.0};
};

/// Extracts base features and indicators against a fixed scene. Conflict points
/// between lanes are precomputed once per scene.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const StaticScene& scene, FeatureSettings settings = {});

  [[nodiscard]] const StaticScene& scene() const { return *scene_; }
  [[nodiscard]] const FeatureSettings& settings() const { return settings_; }

  /// `history` is the ego's observation sequence, latest last; the target must be
  /// visible in the latest observation.
  [[nodiscard]] BaseValues extract_base_features(std::span<const Observation> history,
                                                 VehicleId target, const Goal& goal,
                                                 const OccludedRegionSet& occlusions) const;
  [[nodiscard]] IndicatorValues extract_indicators(const OccludedRegionSet& occlusions,
                                                   VehicleId target, const Goal& goal,
                                                   std::span<const Observation> history) const;
  [[nodiscard]] FeatureVector extract(std::span<const Observation> history, VehicleId target,
                                      const Goal& goal, const OccludedRegionSet& occlusions) const;

  /// Conflicts that traffic on `lane` yields to.
  [[nodiscard]] const std::vector<Conflict>& conflicts_of(LaneId lane) const;

 private:
  [[nodiscard]] BaseValues compute(std::span<const Observation> history, VehicleId target,
                                   const Goal& goal, const OccludedRegionSet& occlusions) const;

  const StaticScene* scene_;
  FeatureSettings settings_;
  std::unordered_map<LaneId, std::vector<Conflict>> conflicts_;
};

/// Convenience wrappers that build a temporary extractor.
BaseValues extract_base_features(std::span<const Observation> history, VehicleId target,
                                 const Goal& goal, const StaticScene& scene,
                                 const OccludedRegionSet& occlusions);
IndicatorValues extract_indicators(const OccludedRegionSet& occlusions, VehicleId target,
                                   const Goal& goal, const StaticScene& scene,
                                   std::span<const Observation> history);

}  // namespace ogrit

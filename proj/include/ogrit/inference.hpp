#pragma once

#include <span>
#include <vector>

#include "ogrit/dtree.hpp"
#include "ogrit/features.hpp"
#include "ogrit/goals.hpp"
#include "ogrit/occlusion.hpp"

namespace ogrit {

struct GoalPosterior {
  VehicleId vehicle{0};
  double time{0.0};
  struct Entry {
    Goal goal;
    double prior{0.0};
    double likelihood{0.0};
    double posterior{0.0};
    FeatureVector features;
  };
  std::vector<Entry> entries;
};

/// p_k = L_k * prior_k / sum_j L_j * prior_j. Priors must be positive and sum to 1.
std::vector<double> posterior(std::span<const double> likelihoods, std::span<const double> priors);
std::vector<double> uniform_prior(std::size_t n);

/// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(std::span<const double> distribution);

struct PipelineTiming {
  double occlusion_ms{0.0};
  double goals_ms{0.0};
  double features_ms{0.0};
  double trees_ms{0.0};
  double total_ms{0.0};
};

struct PipelineOptions {
  double sensor_range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  // Full-information mode used with oracle models: no occlusions, nothing missing.
  bool reveal_all{false};
};

/// Occlusion detection, goal generation, feature extraction, per-goal-type tree
/// inference and posterior for one target. Holds per-scene caches; safe to share
/// across threads.
class Pipeline {
 public:
  Pipeline(const StaticScene& scene, const ModelSet& models, PipelineOptions options = {});

  /// `history` is the ego's observation sequence, latest last.
  [[nodiscard]] GoalPosterior run(std::span<const Observation> history, VehicleId target,
                                  PipelineTiming* timing = nullptr) const;

  /// Occlusions the ego derives from what it currently sees.
  [[nodiscard]] OccludedRegionSet occlusions_for(const Observation& latest) const;

  [[nodiscard]] const FeatureExtractor& extractor() const { return extractor_; }
  [[nodiscard]] const PipelineOptions& options() const { return options_; }

 private:
  const StaticScene* scene_;
  const ModelSet* models_;
  PipelineOptions options_;
  FeatureExtractor extractor_;
};

GoalPosterior run_pipeline(std::span<const Observation> history, VehicleId ego, VehicleId target,
                           const StaticScene& scene, const ModelSet& models,
                           double sensor_range = kDefaultSensorRange);

}  // namespace ogrit

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ogrit/dtree.hpp"
#include "ogrit/features.hpp"
#include "ogrit/goals.hpp"
#include "ogrit/occlusion.hpp"
#include "ogrit/recording.hpp"

namespace ogrit {

/// Where and when a vehicle ended up. The true goal is the goal (generated at the first
/// frame with twice the search depth) that the vehicle reaches, nearest its final position.
struct VehicleOutcome {
  VehicleId id{0};
  double first_time{0.0};
  std::optional<Goal> true_goal;
  double reach_time{0.0};
};

std::map<VehicleId, VehicleOutcome> determine_true_goals(const Recording& recording, const StaticScene& scene,
                                                         int goal_depth = kDefaultGoalDepth);

/// The ego's view of every frame it is present in. With `reveal_all` every vehicle is
/// visible.
std::vector<Observation> ego_history(const Recording& recording, const StaticScene& scene, VehicleId ego,
                                     double sensor_range = kDefaultSensorRange, bool reveal_all = false);

struct SampleMeta {
  std::string scenario_id;
  std::string episode_id;
  double t{0.0};
  VehicleId ego{0};
  VehicleId target{0};
  Goal goal;
  double fraction{0.0};  // of the target's trajectory completed, in [0, 1]
};

struct Sample {
  FeatureVector x;
  std::optional<FeatureVector> oracle_x;  // full-information features for oracle models
  bool y{false};
  SampleMeta meta;
};

struct SampleOptions {
  double sensor_range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  bool with_oracle{false};
};

struct SampleSet {
  std::vector<Sample> samples;
  std::size_t groups{0};                    // (tick, ego, target) groups emitted
  std::size_t groups_without_true_goal{0};  // true goal absent from the generated set
  std::size_t skipped_vehicles{0};          // no determinable true goal
};

/// Samples at 1 Hz for every ordered (ego, target) pair with the target visible to the
/// ego, up to the target reaching its true goal.
SampleSet extract_samples(const Recording& recording, const StaticScene& scene, const SampleOptions& options = {});

/// Extracts episodes in parallel (see thread_count) and concatenates in input order.
SampleSet extract_samples_all(const std::vector<Recording>& recordings, const StaticScene& scene,
                              const SampleOptions& options = {});

/// Feature CSV: metadata, is_true_goal, one column per catalog feature (empty = missing),
/// then fraction_completed, goal_lane, goal_s, goal_x, goal_y.
std::string samples_to_csv_text(const std::vector<Sample>& samples, bool oracle = false);
void write_feature_csv(const std::vector<Sample>& samples, const std::filesystem::path& path, bool oracle = false);
std::vector<Sample> samples_from_csv_text(const std::string& text);
std::vector<Sample> read_feature_csv(const std::filesystem::path& path);

enum class SplitPolicy { hold_one_out, hold_k, ratio_60_20_20 };
SplitPolicy split_policy_from_string(const std::string& name);

struct EpisodeSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Deterministic given the seed. hold_one_out: 1 test, 1 validation; hold_k: 3 and 3;
/// ratio: 60/20/20.
EpisodeSplit split_episodes(std::vector<std::string> episodes, SplitPolicy policy, std::uint64_t seed);

/// Groups samples by goal type; oracle datasets use the full-information vectors.
std::map<GoalType, Dataset> datasets_by_goal_type(const std::vector<Sample>& samples, bool oracle = false);

struct TrainReport {
  ModelSet models;
  std::vector<std::string> warnings;
};

/// Trains one tree per goal type present with both classes; other types get a warning.
TrainReport train_models(const std::vector<Sample>& samples, const TrainingConfig& config,
                         std::vector<std::string> training_episodes);

/// Threads for parallel work: OGRIT_THREADS if set, else hardware concurrency.
unsigned thread_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// On-disk dataset: scene.json, one CSV per episode and dataset.json listing them.
struct DatasetDir {
  std::string scenario_id;
  std::string kind;
  double frame_rate{10.0};
  StaticScene scene;
  std::vector<Recording> episodes;
};

/// "scenario/episode": unique across datasets, used to record training episodes.
std::string episode_key(const std::string& scenario_id, const std::string& episode_id);

void write_dataset_dir(const DatasetDir& data, const std::filesystem::path& dir);
DatasetDir load_dataset_dir(const std::filesystem::path& dir);

}  // namespace ogrit

#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ogrit/datakit.hpp"
#include "ogrit/dtree.hpp"
#include "ogrit/inference.hpp"

namespace ogrit {

/// Test episodes overlap the episodes a model was trained on.
struct SplitMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

/// Throws SplitMismatchError when any test episode was used for training.
void check_split(const ModelSet& models, const std::vector<std::string>& test_episodes);

/// One (episode, tick, ego, target) inference.
struct GroupScore {
  std::string scenario_id;
  std::string episode_id;
  double fraction{0.0};
  std::size_t n_goals{0};
  bool has_true_goal{false};
  double p_true{0.0};     // posterior of the true goal; 0 when it was not generated
  double p_uniform{0.0};  // uniform-prior baseline
};

/// Posterior over each group's goals with a uniform prior. Goal types without a tree
/// get likelihood 0.5. With `oracle` the full-information vectors are used.
std::vector<GroupScore> score_groups(const std::vector<Sample>& samples, const ModelSet& models, bool oracle = false);

struct CurveBin {
  double lo{0.0};
  double hi{0.0};
  std::size_t count{0};
  double mean_p_true{0.0};
  double mean_p_uniform{0.0};
};

struct Curve {
  std::vector<CurveBin> bins;
  std::size_t count{0};
  double mean_p_true{0.0};
  double mean_p_uniform{0.0};
  // Over groups with fraction >= 0.5.
  double late_mean_p_true{0.0};
  double late_mean_p_uniform{0.0};
};

/// Equal-width bins over fraction completed; the last bin includes 1.
Curve make_curve(const std::vector<GroupScore>& groups, int n_bins = 10);

struct LatencyStats {
  std::size_t runs{0};
  double median_ms{0.0};
  double mean_ms{0.0};
  double max_ms{0.0};
};

/// Times Pipeline::run for ego/target pairs at 1 Hz ticks, up to `max_runs` runs.
LatencyStats measure_latency(const std::vector<Recording>& recordings, const StaticScene& scene,
                             const ModelSet& models, const PipelineOptions& options = {},
                             std::size_t max_runs = 200);

struct EvaluationReport {
  std::map<std::string, Curve> curves;         // per scenario plus "all"
  std::map<std::string, Curve> oracle_curves;  // empty without an oracle model
  LatencyStats latency;
  std::size_t groups_without_true_goal{0};
};

nlohmann::json to_json(const Curve& curve);
nlohmann::json to_json(const EvaluationReport& report);
std::string summary_text(const EvaluationReport& report);

/// Curves keyed by scenario id plus "all".
std::map<std::string, Curve> curves_by_scenario(const std::vector<GroupScore>& groups, int n_bins = 10);

}  // namespace ogrit

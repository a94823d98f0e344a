#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ogrit/features.hpp"
#include "ogrit/scene.hpp"

namespace ogrit {

struct TrainingConfig {
  double lambda{1e-4};
  int max_depth{7};
  int min_samples_leaf{10};
  double alpha{1.0};
  // Oracle training: possibly-missing features may be split on anywhere and the
  // indicator lookahead is disabled.
  bool oracle{false};

  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

/// Labelled feature vectors for one goal type.
class Dataset {
 public:
  explicit Dataset(FeatureCatalog catalog = FeatureCatalog::standard());

  void add(FeatureVector x, bool y);

  [[nodiscard]] const FeatureCatalog& catalog() const { return catalog_; }
  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] std::size_t positives() const { return n_pos_; }
  [[nodiscard]] std::size_t negatives() const { return labels_.size() - n_pos_; }
  [[nodiscard]] bool label(std::size_t j) const { return labels_[j]; }
  [[nodiscard]] const FeatureVector& x(std::size_t j) const { return xs_[j]; }
  /// Value of catalog feature `f` for sample `j`; NaN when missing.
  [[nodiscard]] double value(std::size_t j, std::size_t f) const { return matrix_[f][j]; }

  /// Smoothed class weights (N + 2a) / (N_G + a) and (N + 2a) / (N_notG + a).
  [[nodiscard]] std::pair<double, double> class_weights(double alpha) const;

 private:
  FeatureCatalog catalog_;
  std::vector<FeatureVector> xs_;
  std::vector<bool> labels_;
  std::vector<std::vector<double>> matrix_;  // [feature][sample]
  std::size_t n_pos_{0};
};

struct DecisionNode {
  bool leaf{true};
  int feature{-1};
  double threshold{0.0};
  int true_child{-1};
  int false_child{-1};
  double likelihood{0.5};
  double weight_true{1.0};
  double weight_false{1.0};
  double n_g{0.0};
  double n_ng{0.0};
  double impurity{0.0};  // class-weighted entropy of the samples reaching the node

  bool operator==(const DecisionNode&) const = default;
};

/// One tree per goal type; nodes[0] is the root.
struct GoalTree {
  GoalType goal_type{GoalType::straight_on};
  FeatureCatalog catalog{FeatureCatalog::standard()};
  TrainingConfig config;
  double w_g{1.0};   // class weight of positive samples
  double w_ng{1.0};  // class weight of negative samples
  std::vector<DecisionNode> nodes{DecisionNode{}};

  [[nodiscard]] int depth() const;
  [[nodiscard]] std::size_t leaf_count() const;
  /// Structural checks: child indices, binary thresholds, missing-feature guards,
  /// likelihood bounds. Throws ValidationError.
  void validate() const;

  bool operator==(const GoalTree& other) const;
};

/// Weighted binary entropy (bits) of a node with the given class counts.
double weighted_entropy(double n_g, double n_ng, double w_g, double w_ng);

/// Impurity decrease of splitting `samples` on value(f) > c. Every sample must have a
/// known value for `f`.
double impurity_decrease(const Dataset& data, std::span<const std::size_t> samples, std::size_t f,
                         double c, std::pair<double, double> weights);

struct Split {
  std::size_t feature{0};
  double threshold{0.0};
  double decrease{0.0};
};

/// Best split over `allowed` features (catalog order); std::nullopt when no candidate
/// has a positive decrease. Sides with fewer than `min_samples` are not candidates.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> samples,
                                std::span<const std::size_t> allowed, std::pair<double, double> weights,
                                int min_samples = 1);

struct LookaheadSplit {
  double score{0.0};  // indicator decrease + best child decrease - lambda
  double child_threshold{0.0};
};

/// Scores placing ind(f) here and splitting f on its false branch. std::nullopt when the
/// false branch is empty or admits no split.
std::optional<LookaheadSplit> lookahead_split(const Dataset& data, std::span<const std::size_t> samples,
                                              std::size_t f, std::pair<double, double> weights,
                                              double lambda, int min_samples = 1);

double leaf_likelihood(double n_g, double n_ng, double w_g, double w_ng, double alpha);

GoalTree train(const Dataset& data, const TrainingConfig& config, GoalType type = GoalType::straight_on);

/// C(T) = sum over leaves of (weighted share of samples) * impurity + lambda * leaves.
double pruning_cost(const GoalTree& tree, double lambda);

/// Weakest-link pruning. If `cost_trace` is given it receives C(T) before the first
/// collapse and after each one.
GoalTree prune(const GoalTree& tree, double lambda, std::vector<double>* cost_trace = nullptr);

/// Recomputes likelihoods and edge weights from node counts.
void finalize_likelihoods(GoalTree& tree);

double infer_likelihood(const GoalTree& tree, const FeatureVector& x);
/// Node indices visited from root to leaf.
std::vector<int> infer_path(const GoalTree& tree, const FeatureVector& x);

/// All trained trees plus provenance needed by evaluation.
struct ModelSet {
  FeatureCatalog catalog{FeatureCatalog::standard()};
  std::map<GoalType, GoalTree> trees;
  std::vector<std::string> training_episodes;
  bool oracle{false};

  [[nodiscard]] const GoalTree& tree(GoalType type) const;  // throws OgritError when absent
  bool operator==(const ModelSet& other) const;
};

std::string model_to_json_text(const ModelSet& models);
ModelSet model_from_json_text(const std::string& text);
void save_model(const ModelSet& models, const std::filesystem::path& path);
ModelSet load_model(const std::filesystem::path& path);

}  // namespace ogrit

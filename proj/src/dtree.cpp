#include "ogrit/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace ogrit {

namespace {

// Decreases closer than this are treated as ties; a split must beat zero by this much.
constexpr double kTieTol = 1e-12;

struct Counts {
  double g{0.0};
  double ng{0.0};
};

double decrease_from_counts(Counts t, Counts f, double w_g, double w_ng) {
  const double wt = w_g * t.g + w_ng * t.ng;
  const double wf = w_g * f.g + w_ng * f.ng;
  if (wt <= 0.0 || wf <= 0.0) return 0.0;
  const double w = wt + wf;
  const double parent = weighted_entropy(t.g + f.g, t.ng + f.ng, w_g, w_ng);
  return parent - (wt / w * weighted_entropy(t.g, t.ng, w_g, w_ng) +
                   wf / w * weighted_entropy(f.g, f.ng, w_g, w_ng));
}

double midpoint(double a, double b) {
  const double c = a + (b - a) / 2.0;
  return c < b ? c : a;
}

Counts count(const Dataset& data, std::span<const std::size_t> samples) {
  Counts c;
  for (std::size_t j : samples) (data.label(j) ? c.g : c.ng) += 1.0;
  return c;
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (max_depth < 1) throw ValidationError("max-depth must be >= 1");
  if (min_samples_leaf < 1) throw ValidationError("min-samples-leaf must be >= 1");
  if (!(alpha >= 0.0)) throw ValidationError("laplace alpha must be >= 0");
}

Dataset::Dataset(FeatureCatalog catalog) : catalog_(std::move(catalog)), matrix_(catalog_.size()) {}

void Dataset::add(FeatureVector x, bool y) {
  if (x.base().size() != catalog_.base_count() || x.indicators().size() != catalog_.missing_count()) {
    throw ValidationError("feature vector does not match dataset catalog");
  }
  for (std::size_t f = 0; f < catalog_.size(); ++f) {
    const auto v = x.get(catalog_, f);
    matrix_[f].push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
  }
  xs_.push_back(std::move(x));
  labels_.push_back(y);
  if (y) ++n_pos_;
}

std::pair<double, double> Dataset::class_weights(double alpha) const {
  const double n = static_cast<double>(size());
  const double pos = static_cast<double>(positives()) + alpha;
  const double neg = static_cast<double>(negatives()) + alpha;
  const double total = n + 2.0 * alpha;
  return {pos > 0.0 ? total / pos : 1.0, neg > 0.0 ? total / neg : 1.0};
}

double weighted_entropy(double n_g, double n_ng, double w_g, double w_ng) {
  const double a = w_g * n_g;
  const double b = w_ng * n_ng;
  if (a <= 0.0 || b <= 0.0) return 0.0;
  const double p = a / (a + b);
  const double q = b / (a + b);
  return -(p * std::log2(p) + q * std::log2(q));
}

double impurity_decrease(const Dataset& data, std::span<const std::size_t> samples, std::size_t f, double c,
                         std::pair<double, double> weights) {
  Counts t;
  Counts fl;
  for (std::size_t j : samples) {
    const double v = data.value(j, f);
    if (std::isnan(v)) {
      throw ContractViolation("impurity_decrease on missing value of '" + data.catalog().name(f) + "'");
    }
    Counts& side = v > c ? t : fl;
    (data.label(j) ? side.g : side.ng) += 1.0;
  }
  return decrease_from_counts(t, fl, weights.first, weights.second);
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> samples,
                                std::span<const std::size_t> allowed, std::pair<double, double> weights,
                                int min_samples) {
  std::vector<std::size_t> features(allowed.begin(), allowed.end());
  std::sort(features.begin(), features.end());
  const Counts total = count(data, samples);
  const std::size_t n = samples.size();
  const std::size_t min_side = static_cast<std::size_t>(std::max(1, min_samples));

  std::optional<Split> best;
  std::vector<std::pair<double, bool>> column(n);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = data.value(samples[i], f);
      if (std::isnan(v)) {
        throw ContractViolation("split search on missing value of '" + data.catalog().name(f) + "'");
      }
      column[i] = {v, data.label(samples[i])};
    }
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Counts below;  // samples with value <= threshold go to the false branch
    for (std::size_t i = 0; i + 1 < n; ++i) {
      (column[i].second ? below.g : below.ng) += 1.0;
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t n_false = i + 1;
      if (n_false < min_side || n - n_false < min_side) continue;
      const Counts above{total.g - below.g, total.ng - below.ng};
      const double dec = decrease_from_counts(above, below, weights.first, weights.second);
      if (dec <= kTieTol) continue;
      if (!best || dec > best->decrease + kTieTol) {
        best = Split{f, midpoint(column[i].first, column[i + 1].first), dec};
      }
    }
  }
  return best;
}

std::optional<LookaheadSplit> lookahead_split(const Dataset& data, std::span<const std::size_t> samples,
                                              std::size_t f, std::pair<double, double> weights, double lambda,
                                              int min_samples) {
  const FeatureCatalog& cat = data.catalog();
  const std::size_t ind = cat.indicator_of(f);
  std::vector<std::size_t> present;
  std::size_t absent = 0;
  for (std::size_t j : samples) {
    if (data.value(j, ind) > 0.5) {
      ++absent;
    } else {
      present.push_back(j);
    }
  }
  if (present.empty()) return std::nullopt;
  if (absent < static_cast<std::size_t>(min_samples) || present.size() < static_cast<std::size_t>(min_samples)) {
    return std::nullopt;
  }
  const std::size_t only[] = {f};
  const auto child = best_split(data, present, only, weights, min_samples);
  if (!child) return std::nullopt;
  const double ind_dec = impurity_decrease(data, samples, ind, 0.5, weights);
  return LookaheadSplit{ind_dec + child->decrease - lambda, child->threshold};
}

double leaf_likelihood(double n_g, double n_ng, double w_g, double w_ng, double alpha) {
  const double a = w_g * (n_g + alpha);
  const double b = w_ng * (n_ng + alpha);
  if (a + b <= 0.0) return 0.5;
  return a / (a + b);
}

int GoalTree::depth() const {
  std::function<int(int)> rec = [&](int i) -> int {
    const auto& n = nodes.at(static_cast<std::size_t>(i));
    if (n.leaf) return 0;
    return 1 + std::max(rec(n.true_child), rec(n.false_child));
  };
  return rec(0);
}

std::size_t GoalTree::leaf_count() const {
  std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
    const auto& n = nodes.at(static_cast<std::size_t>(i));
    if (n.leaf) return 1;
    return rec(n.true_child) + rec(n.false_child);
  };
  return rec(0);
}

void GoalTree::validate() const {
  if (nodes.empty()) throw ValidationError("tree has no nodes");
  std::vector<int> visits(nodes.size(), 0);
  // indicators on the false branch of the current path
  std::set<std::size_t> guarded;
  std::function<void(int, int)> rec = [&](int i, int depth) {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes.size()) {
      throw ValidationError("tree child index " + std::to_string(i) + " out of range");
    }
    if (++visits[static_cast<std::size_t>(i)] > 1) throw ValidationError("tree node reached twice");
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.leaf) {
      if (!(n.likelihood > 0.0 && n.likelihood < 1.0)) {
        throw ValidationError("leaf likelihood outside (0, 1)");
      }
      return;
    }
    if (depth >= config.max_depth) throw ValidationError("tree deeper than its max-depth");
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= catalog.size()) {
      throw ValidationError("node feature index out of range");
    }
    const auto f = static_cast<std::size_t>(n.feature);
    if (catalog.info(f).kind == FeatureKind::binary && n.threshold != 0.5) {
      throw ValidationError("binary feature '" + catalog.name(f) + "' must use threshold 0.5");
    }
    if (catalog.is_possibly_missing(f) && !config.oracle && !guarded.contains(catalog.indicator_of(f))) {
      throw ValidationError("feature '" + catalog.name(f) + "' tested outside its indicator's false branch");
    }
    rec(n.true_child, depth + 1);
    const bool added = catalog.is_indicator(f) && guarded.insert(f).second;
    rec(n.false_child, depth + 1);
    if (added) guarded.erase(f);
  };
  rec(0, 0);
}

bool GoalTree::operator==(const GoalTree& other) const {
  return goal_type == other.goal_type && catalog == other.catalog && config == other.config &&
         w_g == other.w_g && w_ng == other.w_ng && nodes == other.nodes;
}

namespace {

class Grower {
 public:
  Grower(const Dataset& data, const TrainingConfig& config, GoalTree& tree)
      : data_(data), cat_(data.catalog()), config_(config), tree_(tree), weights_{tree.w_g, tree.w_ng} {}

  void grow(int index, std::vector<std::size_t> samples, int depth, std::set<std::size_t> on_true,
            std::set<std::size_t> on_false) {
    const Counts c = count(data_, samples);
    {
      auto& node = tree_.nodes[static_cast<std::size_t>(index)];
      node.n_g = c.g;
      node.n_ng = c.ng;
      node.impurity = weighted_entropy(c.g, c.ng, weights_.first, weights_.second);
    }
    if (depth >= config_.max_depth || samples.size() < static_cast<std::size_t>(config_.min_samples_leaf) ||
        c.g == 0.0 || c.ng == 0.0) {
      return;
    }

    std::vector<std::size_t> allowed;
    for (std::size_t f = 0; f < cat_.size(); ++f) {
      if (cat_.is_always(f)) {
        allowed.push_back(f);
      } else if (cat_.is_indicator(f)) {
        if (!on_true.contains(f) && !on_false.contains(f)) allowed.push_back(f);
      } else if (config_.oracle || on_false.contains(cat_.indicator_of(f))) {
        allowed.push_back(f);
      }
    }
    const auto single = best_split(data_, samples, allowed, weights_, config_.min_samples_leaf);

    std::optional<std::size_t> look_feature;
    double look_score = -std::numeric_limits<double>::infinity();
    if (!config_.oracle) {
      for (std::size_t f = cat_.always_count(); f < cat_.base_count(); ++f) {
        const std::size_t ind = cat_.indicator_of(f);
        if (on_true.contains(ind) || on_false.contains(ind)) continue;
        const auto la = lookahead_split(data_, samples, f, weights_, config_.lambda, config_.min_samples_leaf);
        if (la && la->score > look_score + kTieTol) {
          look_score = la->score;
          look_feature = f;
        }
      }
    }

    std::size_t feature = 0;
    double threshold = 0.5;
    if (look_feature && look_score > (single ? single->decrease : 0.0) + kTieTol) {
      feature = cat_.indicator_of(*look_feature);
    } else if (single) {
      feature = single->feature;
      threshold = single->threshold;
    } else {
      return;
    }

    std::vector<std::size_t> yes;
    std::vector<std::size_t> no;
    for (std::size_t j : samples) (data_.value(j, feature) > threshold ? yes : no).push_back(j);
    const int t_idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int f_idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    {
      auto& node = tree_.nodes[static_cast<std::size_t>(index)];
      node.leaf = false;
      node.feature = static_cast<int>(feature);
      node.threshold = threshold;
      node.true_child = t_idx;
      node.false_child = f_idx;
    }
    auto true_set = on_true;
    auto false_set = on_false;
    if (cat_.is_indicator(feature)) {
      true_set.insert(feature);
      false_set.insert(feature);
    }
    grow(t_idx, std::move(yes), depth + 1, std::move(true_set), on_false);
    grow(f_idx, std::move(no), depth + 1, on_true, std::move(false_set));
  }

 private:
  const Dataset& data_;
  const FeatureCatalog& cat_;
  const TrainingConfig& config_;
  GoalTree& tree_;
  std::pair<double, double> weights_;
};

// Copies the subtree reachable from the root into preorder-numbered storage.
GoalTree compact(const GoalTree& tree) {
  GoalTree out = tree;
  out.nodes.clear();
  std::function<int(int)> rec = [&](int i) -> int {
    const int at = static_cast<int>(out.nodes.size());
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(i)]);
    if (!out.nodes.back().leaf) {
      const int t = rec(tree.nodes[static_cast<std::size_t>(i)].true_child);
      const int f = rec(tree.nodes[static_cast<std::size_t>(i)].false_child);
      out.nodes[static_cast<std::size_t>(at)].true_child = t;
      out.nodes[static_cast<std::size_t>(at)].false_child = f;
    } else {
      out.nodes.back().feature = -1;
      out.nodes.back().threshold = 0.0;
      out.nodes.back().true_child = -1;
      out.nodes.back().false_child = -1;
      out.nodes.back().weight_true = 1.0;
      out.nodes.back().weight_false = 1.0;
    }
    return at;
  };
  rec(0);
  return out;
}

double weighted_share(const GoalTree& tree, const DecisionNode& n) {
  const auto& root = tree.nodes.front();
  const double total = tree.w_g * root.n_g + tree.w_ng * root.n_ng;
  if (total <= 0.0) return 0.0;
  return (tree.w_g * n.n_g + tree.w_ng * n.n_ng) / total;
}

}  // namespace

double pruning_cost(const GoalTree& tree, double lambda) {
  double cost = 0.0;
  std::function<void(int)> rec = [&](int i) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.leaf) {
      cost += weighted_share(tree, n) * n.impurity + lambda;
      return;
    }
    rec(n.true_child);
    rec(n.false_child);
  };
  rec(0);
  return cost;
}

GoalTree prune(const GoalTree& tree, double lambda, std::vector<double>* cost_trace) {
  GoalTree work = tree;
  if (cost_trace) cost_trace->push_back(pruning_cost(work, lambda));
  if (!(lambda > 0.0)) return work;
  while (true) {
    // subtree leaf impurity and leaf count for every internal node
    std::optional<int> weakest;
    double weakest_g = std::numeric_limits<double>::infinity();
    std::function<std::pair<double, double>(int)> rec = [&](int i) -> std::pair<double, double> {
      const auto& n = work.nodes[static_cast<std::size_t>(i)];
      const double own = weighted_share(work, n) * n.impurity;
      if (n.leaf) return {own, 1.0};
      const auto a = rec(n.true_child);
      const auto b = rec(n.false_child);
      const double sub = a.first + b.first;
      const double leaves = a.second + b.second;
      const double g = (own - sub) / (leaves - 1.0);
      if (g < weakest_g) {
        weakest_g = g;
        weakest = i;
      }
      return {sub, leaves};
    };
    rec(0);
    if (!weakest || weakest_g > lambda) break;
    work.nodes[static_cast<std::size_t>(*weakest)].leaf = true;
    work = compact(work);
    if (cost_trace) cost_trace->push_back(pruning_cost(work, lambda));
  }
  return work;
}

void finalize_likelihoods(GoalTree& tree) {
  for (auto& n : tree.nodes) {
    n.likelihood = leaf_likelihood(n.n_g, n.n_ng, tree.w_g, tree.w_ng, tree.config.alpha);
  }
  for (auto& n : tree.nodes) {
    if (n.leaf) continue;
    n.weight_true = tree.nodes[static_cast<std::size_t>(n.true_child)].likelihood / n.likelihood;
    n.weight_false = tree.nodes[static_cast<std::size_t>(n.false_child)].likelihood / n.likelihood;
  }
}

GoalTree train(const Dataset& data, const TrainingConfig& config, GoalType type) {
  config.validate();
  GoalTree tree;
  tree.goal_type = type;
  tree.catalog = data.catalog();
  tree.config = config;
  std::tie(tree.w_g, tree.w_ng) = data.class_weights(config.alpha);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Grower(data, config, tree).grow(0, std::move(all), 0, {}, {});
  tree = compact(prune(compact(tree), config.lambda));
  finalize_likelihoods(tree);
  return tree;
}

std::vector<int> infer_path(const GoalTree& tree, const FeatureVector& x) {
  std::vector<int> path{0};
  while (true) {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(path.back()));
    if (n.leaf) return path;
    const auto v = x.get(tree.catalog, static_cast<std::size_t>(n.feature));
    if (!v) {
      throw ContractViolation("tree evaluated missing feature '" +
                              tree.catalog.name(static_cast<std::size_t>(n.feature)) + "'");
    }
    path.push_back(*v > n.threshold ? n.true_child : n.false_child);
  }
}

double infer_likelihood(const GoalTree& tree, const FeatureVector& x) {
  return tree.nodes.at(static_cast<std::size_t>(infer_path(tree, x).back())).likelihood;
}

const GoalTree& ModelSet::tree(GoalType type) const {
  const auto it = trees.find(type);
  if (it == trees.end()) throw OgritError("no model for goal type " + std::string(to_string(type)));
  return it->second;
}

bool ModelSet::operator==(const ModelSet& other) const {
  return catalog == other.catalog && trees == other.trees && training_episodes == other.training_episodes &&
         oracle == other.oracle;
}

}  // namespace ogrit

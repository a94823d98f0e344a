#include <functional>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "ogrit/dtree.hpp"

using namespace ogrit;

namespace {

std::vector<std::size_t> all_indices(const Dataset& d) {
  std::vector<std::size_t> v(d.size());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> all_features(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Same-shape check against an independent greedy reference built from exhaustive splits.
void expect_greedy_equivalent(const fixtures::RawData& raw, const GoalTree& tree, int max_depth) {
  std::size_t pos = 0;
  for (bool y : raw.labels) pos += y ? 1 : 0;
  const auto [wg, wn] = oracle::class_weights(pos, raw.labels.size() - pos, 1.0);
  const auto features = all_features(raw.columns.size());
  std::function<void(int, std::vector<std::size_t>, int)> rec = [&](int node, std::vector<std::size_t> rows,
                                                                    int depth) {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(node));
    std::size_t g = 0;
    for (std::size_t r : rows) g += raw.labels[r] ? 1 : 0;
    std::optional<oracle::SplitResult> split;
    if (depth < max_depth && g != 0 && g != rows.size()) {
      std::vector<std::vector<double>> cols(raw.columns.size());
      std::vector<bool> labels;
      for (std::size_t r : rows) {
        for (std::size_t f = 0; f < cols.size(); ++f) cols[f].push_back(raw.columns[f][r]);
        labels.push_back(raw.labels[r]);
      }
      split = oracle::exhaustive_split(cols, labels, features, wg, wn);
    }
    REQUIRE(n.leaf == !split.has_value());
    if (!split) return;
    CHECK(static_cast<std::size_t>(n.feature) == split->feature);
    CHECK(n.threshold == doctest::Approx(split->threshold).epsilon(1e-12));
    std::vector<std::size_t> yes, no;
    for (std::size_t r : rows) (raw.columns[split->feature][r] > split->threshold ? yes : no).push_back(r);
    rec(n.true_child, yes, depth + 1);
    rec(n.false_child, no, depth + 1);
  };
  std::vector<std::size_t> rows(raw.labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rec(0, rows, 0);
}

}  // namespace

TEST_CASE("weighted entropy and class weights") {
  CHECK(weighted_entropy(5, 5, 1, 1) == doctest::Approx(1.0));
  CHECK(weighted_entropy(5, 0, 1, 1) == 0.0);
  CHECK(weighted_entropy(1, 3, 3, 1) == doctest::Approx(1.0));
  const auto catalog = fixtures::scalar_catalog(1);
  fixtures::RawData raw{{{1, 2, 3, 4}}, {true, false, false, false}};
  const auto data = fixtures::to_dataset(raw, catalog);
  const auto [wg, wn] = data.class_weights(1.0);
  CHECK(wg == doctest::Approx(6.0 / 2.0));
  CHECK(wn == doctest::Approx(6.0 / 4.0));
  // the root of any class-weighted tree sits at 0.5
  CHECK(leaf_likelihood(1, 3, wg, wn, 1.0) == doctest::Approx(0.5));
  CHECK(leaf_likelihood(0, 0, wg, wn, 0.0) == 0.5);
}

TEST_CASE("best_split on hand-made data") {
  const auto catalog = fixtures::scalar_catalog(2);
  SUBCASE("single midpoint") {
    const auto data = fixtures::to_dataset({{{1, 3}, {0, 0}}, {false, true}}, catalog);
    const auto s = best_split(data, all_indices(data), all_features(2), {1.0, 1.0});
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->threshold == 2.0);
    CHECK(s->decrease == doctest::Approx(1.0));
  }
  SUBCASE("ties go to the earlier feature") {
    const auto data = fixtures::to_dataset({{{1, 2, 3, 4}, {1, 2, 3, 4}}, {false, false, true, true}}, catalog);
    const auto s = best_split(data, all_indices(data), all_features(2), {1.0, 1.0});
    REQUIRE(s);
    CHECK(s->feature == 0);
    CHECK(s->threshold == 2.5);
  }
  SUBCASE("no informative split") {
    const auto data = fixtures::to_dataset({{{1, 1, 1}, {2, 2, 2}}, {false, true, true}}, catalog);
    CHECK_FALSE(best_split(data, all_indices(data), all_features(2), {1.0, 1.0}));
  }
  SUBCASE("min samples per side") {
    const auto data = fixtures::to_dataset({{{1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}}, {true, false, false, false, false}},
                                           catalog);
    const auto free = best_split(data, all_indices(data), all_features(2), {1.0, 1.0}, 1);
    REQUIRE(free);
    CHECK(free->threshold == 1.5);
    const auto guarded = best_split(data, all_indices(data), all_features(2), {1.0, 1.0}, 2);
    REQUIRE(guarded);
    CHECK(guarded->threshold == 2.5);
  }
}

TEST_CASE("best_split matches exhaustive enumeration") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t nf = 1 + rng() % 5;
    const std::size_t n = 2 + rng() % 120;
    const auto raw = fixtures::random_raw(rng, n, nf);
    const auto data = fixtures::to_dataset(raw, fixtures::scalar_catalog(nf));
    const auto w = data.class_weights(1.0);
    const auto got = best_split(data, all_indices(data), all_features(nf), w);
    const auto want = oracle::exhaustive_split(raw.columns, raw.labels, all_features(nf), w.first, w.second);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    CHECK(got->feature == want->feature);
    CHECK(got->threshold == doctest::Approx(want->threshold).epsilon(1e-12));
    CHECK(std::abs(got->decrease - want->decrease) <= 1e-12);
    CHECK(impurity_decrease(data, all_indices(data), got->feature, got->threshold, w) ==
          doctest::Approx(got->decrease));
  }
}

TEST_CASE("greedy training without missing features equals the reference") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t nf = 1 + rng() % 5;
    const auto raw = fixtures::random_raw(rng, 20 + rng() % 150, nf);
    const auto data = fixtures::to_dataset(raw, fixtures::scalar_catalog(nf));
    TrainingConfig cfg;
    cfg.lambda = 0.0;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 1;
    const auto tree = train(data, cfg);
    CHECK_NOTHROW(tree.validate());
    expect_greedy_equivalent(raw, tree, 3);
  }
}

TEST_CASE("lookahead places the indicator first") {
  std::mt19937_64 rng(19);
  const auto catalog = fixtures::lookahead_catalog();
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = fixtures::random_lookahead(rng);
    const auto data = fixtures::to_dataset(d, catalog);
    const auto want = fixtures::two_level_oracle(d, 1.0);
    const auto la = lookahead_split(data, all_indices(data), 1, data.class_weights(1.0), 1e-4);
    REQUIRE(la);
    CHECK(la->score == doctest::Approx(want.score - 1e-4).epsilon(1e-12));
    CHECK(la->child_threshold == doctest::Approx(want.threshold));
    if (want.score - want.best_single <= 1e-4) continue;
    ++checked;
    TrainingConfig cfg;
    cfg.max_depth = 2;
    cfg.min_samples_leaf = 1;
    const auto tree = train(data, cfg);
    REQUIRE_FALSE(tree.nodes[0].leaf);
    CHECK(tree.nodes[0].feature == static_cast<int>(catalog.indicator_of(1)));
    const auto& f = tree.nodes[static_cast<std::size_t>(tree.nodes[0].false_child)];
    REQUIRE_FALSE(f.leaf);
    CHECK(f.feature == 1);
    CHECK(f.threshold == doctest::Approx(want.threshold));
  }
  CHECK(checked >= 5);
}

TEST_CASE("oracle training splits on possibly-missing features directly") {
  std::mt19937_64 rng(23);
  fixtures::LookaheadData d = fixtures::random_lookahead(rng);
  for (auto& m : d.m) {
    if (!m) m = 5.0;
  }
  const auto catalog = fixtures::lookahead_catalog();
  const auto data = fixtures::to_dataset(d, catalog);
  TrainingConfig cfg;
  cfg.oracle = true;
  cfg.max_depth = 1;
  const auto tree = train(data, cfg);
  REQUIRE_FALSE(tree.nodes[0].leaf);
  CHECK(tree.nodes[0].feature == 1);
}

TEST_CASE("pruning") {
  std::mt19937_64 rng(31);
  const auto raw = fixtures::random_raw(rng, 200, 4);
  const auto data = fixtures::to_dataset(raw, fixtures::scalar_catalog(4));
  TrainingConfig cfg;
  cfg.lambda = 0.0;
  cfg.min_samples_leaf = 1;
  const auto full = train(data, cfg);
  REQUIRE(full.leaf_count() > 4);
  CHECK(prune(full, 0.0) == full);
  for (double lambda : {1e-4, 1e-2, 1e6}) {
    std::vector<double> trace;
    const auto pruned = prune(full, lambda, &trace);
    REQUIRE_FALSE(trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(pruning_cost(pruned, lambda) <= pruning_cost(full, lambda) + 1e-12);
    if (lambda == 1e6) CHECK(pruned.leaf_count() == 1);
  }
}

TEST_CASE("leaf likelihood equals one half times the path weights") {
  std::mt19937_64 rng(41);
  const auto raw = fixtures::random_raw(rng, 150, 3);
  const auto tree = train(fixtures::to_dataset(raw, fixtures::scalar_catalog(3)), {});
  std::function<void(int, double)> rec = [&](int i, double product) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.leaf) {
      CHECK(std::abs(n.likelihood - 0.5 * product) <= 1e-9);
      return;
    }
    rec(n.true_child, product * n.weight_true);
    rec(n.false_child, product * n.weight_false);
  };
  rec(0, 1.0);
}

TEST_CASE("missing values are never evaluated") {
  std::mt19937_64 rng(3);
  const auto catalog = fixtures::lookahead_catalog();
  const auto data = fixtures::to_dataset(fixtures::random_lookahead(rng), catalog);
  const auto tree = train(data, {.lambda = 1e-4, .max_depth = 5, .min_samples_leaf = 2});
  CHECK_NOTHROW(tree.validate());
  for (int k = 0; k < 200; ++k) {
    const bool miss = rng() % 2;
    const auto x = assemble({double(rng() % 10), miss ? std::nullopt : std::optional<double>(rng() % 10)}, {miss},
                            catalog);
    CHECK_NOTHROW(infer_likelihood(tree, x));
  }
  // a hand-corrupted tree that reads m on the missing branch is rejected
  GoalTree bad;
  bad.catalog = catalog;
  bad.nodes = {DecisionNode{false, 1, 5.0, 1, 2}, DecisionNode{}, DecisionNode{}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(infer_likelihood(bad, assemble({1.0, std::nullopt}, {true}, catalog)), ContractViolation);
}

TEST_CASE("model JSON round trip keeps thresholds exact") {
  std::mt19937_64 rng(8);
  const auto raw = fixtures::random_raw(rng, 120, 2);
  ModelSet models;
  models.catalog = fixtures::scalar_catalog(2);
  auto tree = train(fixtures::to_dataset(raw, models.catalog), {}, GoalType::exit_left);
  tree.nodes[0].threshold = 0.1 + 0.2;  // not representable in short decimal
  models.trees[GoalType::exit_left] = tree;
  models.training_episodes = {"s/e1", "s/e2"};
  const auto text = model_to_json_text(models);
  const auto back = model_from_json_text(text);
  CHECK(back == models);
  CHECK(model_to_json_text(back) == text);
  CHECK_THROWS_AS(model_from_json_text("[]"), ParseError);
  CHECK_THROWS_AS((void)back.tree(GoalType::cross_road), OgritError);
}

TEST_CASE("training config validation") {
  CHECK_THROWS_AS(TrainingConfig{.lambda = -1}.validate(), ValidationError);
  CHECK_THROWS_AS(TrainingConfig{.max_depth = 0}.validate(), ValidationError);
  CHECK_THROWS_AS(TrainingConfig{.min_samples_leaf = 0}.validate(), ValidationError);
}

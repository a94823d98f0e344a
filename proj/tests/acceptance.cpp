// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "ogrit/datakit.hpp"
#include "ogrit/evaluation.hpp"
#include "ogrit/inference.hpp"
#include "ogrit/synthetic.hpp"
#include "ogrit/verify.hpp"

using namespace ogrit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass{false};
  std::string detail;
};

int failures = 0;

void report(int n, const Outcome& o) {
  std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

void run(int n, const std::function<Outcome()>& body) {
  try {
    report(n, body());
  } catch (const std::exception& e) {
    report(n, {false, std::string("exception: ") + e.what()});
  }
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// ---- shared desk-scale experiment ----

struct Experiment {
  StaticScene roundabout_scene;
  std::vector<Recording> roundabout_test;
  std::vector<Sample> train_samples;
  std::vector<Sample> test_samples;
  ModelSet models;
  ModelSet oracle_models;
  double seconds{0.0};
};

constexpr int kEpisodes = 20;
constexpr int kTrain = 16;

const Experiment& experiment() {
  static const Experiment e = [] {
    Experiment out;
    const auto start = Clock::now();
    std::vector<std::string> train_eps;
    const SampleOptions opts{.with_oracle = true};
    for (const auto& [kind, seed] : {std::pair{ScenarioKind::roundabout, 11ULL}, std::pair{ScenarioKind::t_junction, 12ULL}}) {
      auto data = generate_synthetic(kind, kEpisodes, seed);
      const std::vector<Recording> train(data.episodes.begin(), data.episodes.begin() + kTrain);
      const std::vector<Recording> test(data.episodes.begin() + kTrain, data.episodes.end());
      for (const auto& r : train) train_eps.push_back(episode_key(r.scenario_id, r.episode_id));
      auto tr = extract_samples_all(train, data.scene, opts);
      auto te = extract_samples_all(test, data.scene, opts);
      std::move(tr.samples.begin(), tr.samples.end(), std::back_inserter(out.train_samples));
      std::move(te.samples.begin(), te.samples.end(), std::back_inserter(out.test_samples));
      if (kind == ScenarioKind::roundabout) {
        out.roundabout_scene = data.scene;
        out.roundabout_test = test;
      }
    }
    TrainingConfig cfg;
    out.models = train_models(out.train_samples, cfg, train_eps).models;
    cfg.oracle = true;
    out.oracle_models = train_models(out.train_samples, cfg, train_eps).models;
    out.seconds = seconds_since(start);
    return out;
  }();
  return e;
}

FeatureVector random_vector(std::mt19937_64& rng, const FeatureCatalog& cat) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BaseValues base(cat.base_count());
  IndicatorValues ind(cat.missing_count(), false);
  for (std::size_t f = 0; f < cat.base_count(); ++f) {
    if (cat.is_possibly_missing(f) && u(rng) < 0.5) {
      ind[f - cat.always_count()] = true;
      continue;
    }
    const auto& info = cat.info(f);
    switch (info.kind) {
      case FeatureKind::binary:
        base[f] = u(rng) < 0.5 ? 0.0 : 1.0;
        break;
      case FeatureKind::integer:
        base[f] = std::floor(info.lower + u(rng) * (info.upper - info.lower + 1.0));
        if (*base[f] > info.upper) base[f] = info.upper;
        break;
      case FeatureKind::scalar:
        base[f] = info.lower + u(rng) * (info.upper - info.lower);
        break;
    }
  }
  return assemble(std::move(base), std::move(ind), cat);
}

Outcome criterion_split() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nf = 1 + rng() % 5;
    const std::size_t n = 2 + rng() % 199;
    const auto raw = fixtures::random_raw(rng, n, nf);
    const auto data = fixtures::to_dataset(raw, fixtures::scalar_catalog(nf));
    const auto w = data.class_weights(1.0);
    const auto feats = iota_n(nf);
    const auto got = best_split(data, iota_n(data.size()), feats, w);
    const auto want = oracle::exhaustive_split(raw.columns, raw.labels, feats, w.first, w.second);
    bool ok = got.has_value() == want.has_value();
    if (ok && got) {
      ok = got->feature == want->feature && got->threshold == want->threshold &&
           std::abs(got->decrease - want->decrease) <= 1e-12;
    }
    mismatches += ok ? 0 : 1;
  }
  const double s = seconds_since(start);
  std::ostringstream d;
  d << "100 datasets, " << mismatches << " mismatches, " << s << " s";
  return {mismatches == 0 && s < 10.0, d.str()};
}

Outcome criterion_lookahead() {
  const auto start = Clock::now();
  constexpr double kLambda = 1e-4;
  std::mt19937_64 rng(202);
  const auto catalog = fixtures::lookahead_catalog();
  const std::size_t m = 1;
  const int ind = static_cast<int>(catalog.indicator_of(m));
  int applicable = 0;
  int wrong = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = fixtures::random_lookahead(rng);
    const auto data = fixtures::to_dataset(d, catalog);
    const auto want = fixtures::two_level_oracle(d, 1.0);
    if (want.score - want.best_single <= kLambda) continue;
    ++applicable;
    TrainingConfig cfg;
    cfg.lambda = kLambda;
    cfg.max_depth = 2;
    cfg.min_samples_leaf = 1;
    const auto tree = train(data, cfg);
    bool ok = !tree.nodes[0].leaf && tree.nodes[0].feature == ind;
    if (ok) {
      const auto& f = tree.nodes[static_cast<std::size_t>(tree.nodes[0].false_child)];
      ok = !f.leaf && f.feature == static_cast<int>(m) && std::abs(f.threshold - want.threshold) <= 1e-9;
    }
    wrong += ok ? 0 : 1;
  }
  const double s = seconds_since(start);
  std::ostringstream d;
  d << applicable << " of 50 datasets where the two-level score wins by > lambda, " << wrong << " wrong structures, "
    << s << " s";
  return {wrong == 0 && applicable > 0 && s < 30.0, d.str()};
}

Outcome criterion_missing_safety() {
  const auto& e = experiment();
  std::mt19937_64 rng(303);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto x = random_vector(rng, e.models.catalog);
    for (const auto& [type, tree] : e.models.trees) {
      try {
        (void)infer_likelihood(tree, x);
      } catch (const ContractViolation&) {
        ++violations;
      }
    }
  }
  std::ostringstream d;
  d << "10000 vectors x " << e.models.trees.size() << " trees, " << violations << " missing-value evaluations";
  return {violations == 0 && !e.models.trees.empty(), d.str()};
}

Outcome criterion_leaf_weights() {
  const auto& e = experiment();
  double worst = 0.0;
  std::size_t leaves = 0;
  for (const auto* set : {&e.models, &e.oracle_models}) {
    for (const auto& [type, tree] : set->trees) {
      std::function<void(int, double)> rec = [&](int i, double product) {
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        if (n.leaf) {
          worst = std::max(worst, std::abs(n.likelihood - 0.5 * product));
          ++leaves;
          return;
        }
        rec(n.true_child, product * n.weight_true);
        rec(n.false_child, product * n.weight_false);
      };
      rec(0, 1.0);
    }
  }
  // the worked example: a path whose edges carry weights 1.32, 0.05 and 0.01
  GoalTree hand;
  hand.nodes = {fixtures::split_node(0, 0.5, 1, 2), fixtures::split_node(1, 0.5, 3, 4), fixtures::leaf_node(0.34),
                fixtures::split_node(2, 0.5, 5, 6), fixtures::leaf_node(0.5), fixtures::leaf_node(0.0),
                fixtures::leaf_node(0.5)};
  hand.nodes[0].weight_true = 1.32;
  hand.nodes[1].weight_true = 0.05;
  hand.nodes[3].weight_true = 0.01;
  double product = 1.0;
  int i = 0;
  for (; !hand.nodes[static_cast<std::size_t>(i)].leaf; i = hand.nodes[static_cast<std::size_t>(i)].true_child) {
    product *= hand.nodes[static_cast<std::size_t>(i)].weight_true;
  }
  const double example = 0.5 * product;
  char rounded[16];
  std::snprintf(rounded, sizeof(rounded), "%.4f", example);
  const bool example_ok = std::abs(example - 3.3e-4) <= 1e-12 && std::string(rounded) == "0.0003";
  std::ostringstream d;
  d << leaves << " leaves, max |L - 0.5*prod w| = " << worst << ", worked example " << example << " -> " << rounded;
  return {worst <= 1e-9 && leaves > 0 && example_ok, d.str()};
}

Outcome criterion_pruning() {
  std::mt19937_64 rng(505);
  int bad = 0;
  std::size_t trees = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto raw = fixtures::random_raw(rng, 80 + rng() % 120, 1 + rng() % 5);
    const auto data = fixtures::to_dataset(raw, fixtures::scalar_catalog(raw.columns.size()));
    TrainingConfig cfg;
    cfg.lambda = 0.0;
    cfg.min_samples_leaf = 1;
    const auto full = train(data, cfg);
    ++trees;
    for (double lambda : {0.0, 1e-4, 1e-2, 1e6}) {
      std::vector<double> trace;
      const auto pruned = prune(full, lambda, &trace);
      bool ok = !trace.empty() && trace.back() <= trace.front() + 1e-12;
      for (std::size_t i = 1; i < trace.size(); ++i) ok = ok && trace[i] <= trace[i - 1] + 1e-12;
      if (lambda == 0.0) ok = ok && pruned == full;
      if (lambda == 1e6) ok = ok && pruned.leaf_count() == 1;
      bad += ok ? 0 : 1;
    }
  }
  std::ostringstream d;
  d << trees << " trees x 4 lambdas, " << bad << " violations";
  return {bad == 0, d.str()};
}

Outcome criterion_occlusion() {
  const auto start = Clock::now();
  const auto r = fixtures::compare_occlusion(606, 1000, 100.0);
  const double s = seconds_since(start);
  std::ostringstream d;
  d << r.configs << " configs, " << r.points << " points (" << r.skipped << " near boundaries), " << r.disagreements
    << " disagreements, " << s << " s";
  if (!r.first_failure.empty()) d << "; first: " << r.first_failure;
  return {r.disagreements == 0 && r.configs == 1000 && s < 60.0, d.str()};
}

Outcome criterion_posterior() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  double worst_sum = 0.0;
  double worst_scale = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<double> lik(n), prior(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      lik[k] = u(rng);
      prior[k] = u(rng);
      total += prior[k];
    }
    for (auto& p : prior) p /= total;
    const auto a = posterior(lik, prior);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0));
    const double scale = std::exp(std::uniform_real_distribution<double>(-10.0, 10.0)(rng));
    auto scaled = lik;
    for (auto& l : scaled) l *= scale;
    const auto b = posterior(scaled, prior);
    for (std::size_t k = 0; k < n; ++k) worst_scale = std::max(worst_scale, std::abs(a[k] - b[k]));
  }
  std::ostringstream d;
  d << "10000 inputs, max |sum - 1| = " << worst_sum << ", max scale drift = " << worst_scale;
  return {worst_sum <= 1e-9 && worst_scale <= 1e-9, d.str()};
}

Outcome criterion_learning() {
  const auto start = Clock::now();
  const auto& e = experiment();
  const auto curve = make_curve(score_groups(e.test_samples, e.models));
  const auto oracle_curve = make_curve(score_groups(e.test_samples, e.oracle_models, true));
  const double lift = curve.late_mean_p_true - curve.late_mean_p_uniform;
  const double gap = oracle_curve.late_mean_p_true - curve.late_mean_p_true;
  const double s = e.seconds + seconds_since(start);
  std::ostringstream d;
  d << "late mean " << curve.late_mean_p_true << " vs uniform " << curve.late_mean_p_uniform << " (lift " << lift
    << "), oracle " << oracle_curve.late_mean_p_true << " (gap " << gap << "), " << s << " s";
  return {lift >= 0.15 && gap >= -0.02 && s < 300.0, d.str()};
}

std::string verdict(const ModelSet& models, const Proposition& prop, bool& ok) {
  const auto r = check(models, prop);
  if (r.verified) return "verified";
  const bool valid = r.counterexample && fixtures::premises_hold(models, prop, *r.counterexample) &&
                     !evaluate_conclusion(models, prop, *r.counterexample).holds;
  ok = ok && valid;
  return valid ? "refuted, counterexample confirmed" : "refuted, counterexample INVALID";
}

Outcome criterion_verification() {
  std::mt19937_64 rng(909);
  int disagreements = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto problem = fixtures::random_problem(rng);
    const bool checker = check(problem.models, problem.prop).verified;
    const bool grid = oracle::grid_verdict(problem.models, problem.prop, oracle::small_grid());
    disagreements += checker == grid ? 0 : 1;
  }
  const auto& e = experiment();
  bool ok = disagreements == 0;
  const std::string p1 = verdict(e.models, builtin_proposition(1), ok);
  const std::string p3 = verdict(e.models, builtin_proposition(3), ok);
  std::ostringstream d;
  d << "20 random problems, " << disagreements << " disagreements; proposition 1 " << p1 << "; proposition 3 " << p3;
  return {ok, d.str()};
}

Outcome criterion_latency() {
  const auto& e = experiment();
  const auto stats = measure_latency(e.roundabout_test, e.roundabout_scene, e.models, {}, 200);
  std::ostringstream d;
  d << stats.runs << " runs, median " << stats.median_ms << " ms, mean " << stats.mean_ms << " ms, max "
    << stats.max_ms << " ms";
  return {stats.runs > 0 && stats.median_ms <= 26.0, d.str()};
}

}  // namespace

int main() {
  run(1, criterion_split);
  run(2, criterion_lookahead);
  run(3, criterion_missing_safety);
  run(4, criterion_leaf_weights);
  run(5, criterion_pruning);
  run(6, criterion_occlusion);
  run(7, criterion_posterior);
  run(8, criterion_learning);
  run(9, criterion_verification);
  run(10, criterion_latency);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

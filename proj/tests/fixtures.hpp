#pragma once

#include <random>
#include <string>
#include <vector>

#include "ogrit/dtree.hpp"
#include "ogrit/occlusion.hpp"
#include "ogrit/verify.hpp"
#include "oracles.hpp"

namespace fixtures {

struct OcclusionComparison {
  std::size_t configs{0};
  std::size_t points{0};     // midline points compared
  std::size_t skipped{0};    // within 1e-3 m of a possible shadow boundary
  std::size_t disagreements{0};
  std::string first_failure;
};

inline ogrit::Polygon rotated_box(ogrit::Vec2 c, double half_l, double half_w, double angle) {
  const ogrit::Vec2 u = ogrit::unit_from_angle(angle);
  const ogrit::Vec2 v{-u.y, u.x};
  return {c + u * half_l + v * half_w, c - u * half_l + v * half_w, c - u * half_l - v * half_w,
          c + u * half_l - v * half_w};
}

/// Random egos, building boxes, triangles, parked vehicles and straight lanes; every
/// lane midline point is checked against the line-of-sight oracle.
inline OcclusionComparison compare_occlusion(std::uint64_t seed, int n_configs, double range = 100.0) {
  using namespace ogrit;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  OcclusionComparison out;
  for (int cfg = 0; cfg < n_configs; ++cfg) {
    const Vec2 ego{uni(-20, 20), uni(-20, 20)};
    std::vector<ObstaclePolygon> buildings;
    std::vector<std::vector<oracle::P>> all_polys;
    auto clear_of_ego = [&](const Polygon& poly) {
      return !point_in_polygon(poly, ego) && distance_to_boundary(poly, ego) > 0.5;
    };
    const int n_buildings = 1 + static_cast<int>(u01(rng) * 4);
    while (static_cast<int>(buildings.size()) < n_buildings) {
      const double r = uni(4, 80), a = uni(-std::numbers::pi, std::numbers::pi);
      const Vec2 c = ego + unit_from_angle(a) * r;
      Polygon poly;
      if (u01(rng) < 0.7) {
        poly = rotated_box(c, uni(1, 12), uni(1, 12), uni(0, std::numbers::pi));
      } else {
        const double s = uni(2, 10), rot = uni(0, 2 * std::numbers::pi);
        for (int k = 0; k < 3; ++k) poly.push_back(c + unit_from_angle(rot + k * 2.0944 + uni(-0.3, 0.3)) * s);
      }
      if (!clear_of_ego(poly)) continue;
      buildings.push_back({poly, ObstacleKind::building});
    }
    Frame frame;
    frame[0] = VehicleState(0, 0.0, ego, uni(-3, 3), 0.0, 0.0);
    const int n_vehicles = static_cast<int>(u01(rng) * 4);
    for (int k = 1; k <= n_vehicles;) {
      const Vec2 c = ego + unit_from_angle(uni(-3.14, 3.14)) * uni(4, 60);
      VehicleState v(k, 0.0, c, uni(-3, 3), 5.0, 0.0);
      if (!clear_of_ego(v.footprint())) continue;
      frame[k] = v;
      ++k;
    }
    for (const auto& b : buildings) {
      std::vector<oracle::P> poly;
      for (const auto& p : b.vertices) poly.push_back({p.x, p.y});
      all_polys.push_back(poly);
    }
    for (const auto& [id, v] : frame) {
      if (id == 0) continue;
      std::vector<oracle::P> poly;
      for (const auto& p : v.footprint()) poly.push_back({p.x, p.y});
      all_polys.push_back(poly);
    }
    std::vector<Lane> lanes;
    for (int k = 0; k < 4; ++k) {
      const Vec2 a{uni(-120, 120), uni(-120, 120)};
      const Vec2 b{uni(-120, 120), uni(-120, 120)};
      if (distance(a, b) < 5) continue;
      Lane lane;
      lane.id = k + 1;
      lane.midline = PolylinePath({a, b});
      lane.boundary = corridor_polygon(lane.midline.points(), 1.5);
      lanes.push_back(lane);
    }
    const auto scene = StaticScene::from_parts("random", lanes, {}, buildings);
    const auto occ = compute_occluded_regions(frame, scene, 0, range, {.with_lanes = false});
    ++out.configs;
    for (const auto& lane : scene.lanes()) {
      for (double s = 0.0; s <= lane.length(); s += 0.5) {
        const Vec2 p = lane.midline.point_at(s);
        const oracle::P op{p.x, p.y};
        if (oracle::boundary_distance({ego.x, ego.y}, op, all_polys, range) < 1e-3) {
          ++out.skipped;
          continue;
        }
        ++out.points;
        const bool expect = oracle::hidden({ego.x, ego.y}, op, all_polys, range);
        if (occ.occludes(p) != expect) {
          if (out.disagreements == 0) {
            out.first_failure = "config " + std::to_string(cfg) + " point (" + std::to_string(p.x) + ", " +
                                std::to_string(p.y) + ") expected " + (expect ? "hidden" : "visible");
          }
          ++out.disagreements;
        }
      }
    }
  }
  return out;
}

// ---- decision-tree datasets ----

struct RawData {
  std::vector<std::vector<double>> columns;  // [feature][sample]
  std::vector<bool> labels;
};

inline ogrit::FeatureCatalog scalar_catalog(std::size_t n_features) {
  std::vector<ogrit::FeatureInfo> infos;
  for (std::size_t f = 0; f < n_features; ++f) {
    infos.push_back({"x" + std::to_string(f), ogrit::FeatureKind::scalar, -100.0, 100.0});
  }
  return ogrit::FeatureCatalog(infos, {});
}

inline ogrit::Dataset to_dataset(const RawData& raw, const ogrit::FeatureCatalog& catalog) {
  ogrit::Dataset data(catalog);
  for (std::size_t j = 0; j < raw.labels.size(); ++j) {
    ogrit::BaseValues base;
    for (const auto& col : raw.columns) base.push_back(col[j]);
    data.add(ogrit::assemble(std::move(base), {}, catalog), raw.labels[j]);
  }
  return data;
}

/// Fully observed data: some features are small-integer valued (many ties), some
/// continuous; labels follow a noisy threshold rule on a random feature.
inline RawData random_raw(std::mt19937_64& rng, std::size_t n_samples, std::size_t n_features) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RawData raw;
  raw.columns.assign(n_features, std::vector<double>(n_samples));
  for (std::size_t f = 0; f < n_features; ++f) {
    const bool discrete = u01(rng) < 0.5;
    for (auto& v : raw.columns[f]) v = discrete ? std::floor(u01(rng) * 5.0) : u01(rng) * 20.0 - 10.0;
  }
  const std::size_t rule = static_cast<std::size_t>(u01(rng) * static_cast<double>(n_features));
  const double noise = u01(rng) * 0.4;
  double median = 0.0;
  {
    auto col = raw.columns[rule];
    std::nth_element(col.begin(), col.begin() + static_cast<long>(col.size() / 2), col.end());
    median = col[col.size() / 2];
  }
  for (std::size_t j = 0; j < n_samples; ++j) {
    const bool y = raw.columns[rule][j] > median;
    raw.labels.push_back(u01(rng) < noise ? !y : y);
  }
  return raw;
}

/// a always known (noise); m possibly missing, decisive when present; missingness
/// independent of the label.
struct LookaheadData {
  std::vector<std::optional<double>> m;
  std::vector<double> a;
  std::vector<bool> labels;
};

inline ogrit::FeatureCatalog lookahead_catalog() {
  return ogrit::FeatureCatalog({{"a", ogrit::FeatureKind::scalar, 0.0, 10.0}},
                               {{"m", ogrit::FeatureKind::scalar, 0.0, 10.0}});
}

inline LookaheadData random_lookahead(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  LookaheadData d;
  const std::size_t n = 60 + static_cast<std::size_t>(u01(rng) * 140);
  const double p_missing = 0.2 + 0.4 * u01(rng);
  const double cut = 3.0 + 4.0 * u01(rng);
  for (std::size_t j = 0; j < n; ++j) {
    d.a.push_back(std::round(u01(rng) * 1000.0) / 100.0);
    const bool miss = u01(rng) < p_missing;
    const double m = std::round(u01(rng) * 1000.0) / 100.0;
    d.m.push_back(miss ? std::nullopt : std::optional<double>(m));
    d.labels.push_back(miss ? u01(rng) < 0.5 : ((m > cut) != (u01(rng) < 0.03)));
  }
  return d;
}

inline ogrit::Dataset to_dataset(const LookaheadData& d, const ogrit::FeatureCatalog& catalog) {
  ogrit::Dataset data(catalog);
  for (std::size_t j = 0; j < d.labels.size(); ++j) {
    data.add(ogrit::assemble({d.a[j], d.m[j]}, {!d.m[j].has_value()}, catalog), d.labels[j]);
  }
  return data;
}

struct TwoLevel {
  double score{0.0};       // indicator decrease + best child decrease on m
  double threshold{0.0};   // child threshold on m
  double best_single{0.0}; // best raw single split at the root over {a, indicator}
};

/// Exhaustive two-level search for the indicator-then-m structure, from raw counts.
inline TwoLevel two_level_oracle(const LookaheadData& d, double alpha) {
  std::size_t pos = 0;
  for (bool y : d.labels) pos += y ? 1 : 0;
  const auto [wg, wn] = oracle::class_weights(pos, d.labels.size() - pos, alpha);
  TwoLevel out;
  // indicator split at the root
  double tg = 0, tn = 0, fg = 0, fn = 0;
  std::vector<std::vector<double>> present_cols(1);
  std::vector<bool> present_labels;
  std::vector<std::vector<double>> root_cols(2);
  for (std::size_t j = 0; j < d.labels.size(); ++j) {
    const bool miss = !d.m[j];
    if (d.labels[j]) (miss ? tg : fg) += 1;
    else (miss ? tn : fn) += 1;
    if (!miss) {
      present_cols[0].push_back(*d.m[j]);
      present_labels.push_back(d.labels[j]);
    }
    root_cols[0].push_back(d.a[j]);
    root_cols[1].push_back(miss ? 1.0 : 0.0);
  }
  const double ind = oracle::decrease(tg, tn, fg, fn, wg, wn);
  const auto child = oracle::exhaustive_split(present_cols, present_labels, {0}, wg, wn);
  out.score = ind + (child ? child->decrease : 0.0);
  out.threshold = child ? child->threshold : 0.0;
  const auto single = oracle::exhaustive_split(root_cols, d.labels, {0, 1}, wg, wn);
  out.best_single = single ? single->decrease : 0.0;
  return out;
}

// ---- verification fixtures ----

inline ogrit::DecisionNode split_node(std::size_t feature, double threshold, int t, int f) {
  ogrit::DecisionNode n;
  n.leaf = false;
  n.feature = static_cast<int>(feature);
  n.threshold = threshold;
  n.true_child = t;
  n.false_child = f;
  return n;
}

inline ogrit::DecisionNode leaf_node(double likelihood) {
  ogrit::DecisionNode n;
  n.likelihood = likelihood;
  return n;
}

/// Small hand-written trees over the standard catalog, used for SMT goldens.
inline ogrit::ModelSet fixture_models() {
  using namespace ogrit;
  ModelSet models;
  const auto& cat = models.catalog;
  const std::size_t dist = cat.index(feature::dist_oncoming);
  const std::size_t dist_ind = cat.indicator_of(dist);
  const std::size_t exit = cat.index(feature::roundabout_exit_number);
  auto make = [&](GoalType type, std::vector<DecisionNode> nodes) {
    GoalTree t;
    t.goal_type = type;
    t.nodes = std::move(nodes);
    t.validate();
    models.trees[type] = t;
  };
  make(GoalType::straight_on, {split_node(dist_ind, 0.5, 1, 2), leaf_node(0.4), split_node(dist, 40.0, 3, 4),
                               leaf_node(0.7), leaf_node(0.5)});
  make(GoalType::exit_left, {split_node(dist_ind, 0.5, 1, 2), leaf_node(0.6), leaf_node(0.3)});
  make(GoalType::enter_right, {split_node(dist_ind, 0.5, 1, 2), leaf_node(0.35),
                               split_node(cat.index(feature::angle_in_lane), 0.1, 3, 4), leaf_node(0.8),
                               leaf_node(0.55)});
  make(GoalType::enter_left, {leaf_node(0.5)});
  make(GoalType::exit_roundabout, {split_node(cat.indicator_of(exit), 0.5, 1, 2), leaf_node(0.4),
                                   split_node(exit, 3.5, 3, 4), leaf_node(0.2), leaf_node(0.6)});
  return models;
}

struct RandomProblem {
  ogrit::ModelSet models;
  ogrit::Proposition prop;
};

/// Random depth-<=4 trees over the small catalog and a random proposition about them.
inline RandomProblem random_problem(std::mt19937_64& rng) {
  using namespace ogrit;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(u01(rng) * static_cast<double>(n)); };
  RandomProblem out;
  out.models.catalog = oracle::small_catalog();
  out.models.oracle = u01(rng) < 0.2;
  const std::vector<GoalType> types{GoalType::straight_on, GoalType::exit_left};
  for (GoalType t : types) out.models.trees[t] = oracle::random_tree(rng, t, 1 + static_cast<int>(pick(4)));

  Proposition& p = out.prop;
  p.name = "random";
  p.instances = 2;
  p.goals = u01(rng) < 0.6 ? types : std::vector<GoalType>{types[pick(2)]};
  const std::vector<double> values{1.0, 5.0, 9.0};
  const std::size_t n_premises = pick(4);
  for (std::size_t i = 0; i < n_premises; ++i) {
    Premise q;
    const double r = u01(rng);
    if (r < 0.35) {
      q.kind = Premise::Kind::eq_across;
      for (std::size_t f = 0; f < 3; ++f) {
        if (u01(rng) < 0.6) q.features.push_back(f);
      }
      if (q.features.empty()) q.features.push_back(pick(3));
    } else if (r < 0.7) {
      q.kind = Premise::Kind::fix;
      q.instance = 1 + static_cast<int>(pick(2));
      q.features = {pick(2)};
      q.value = values[pick(3)];
    } else {
      q.kind = Premise::Kind::indicator;
      q.instance = 1 + static_cast<int>(pick(2));
      q.features = {2};
      q.value = u01(rng) < 0.5 ? 1.0 : 0.0;
    }
    if (u01(rng) < 0.25) q.goal = p.goals[pick(p.goals.size())];
    p.premises.push_back(q);
  }
  const bool swap = u01(rng) < 0.5;
  p.conclusion.lhs_instance = swap ? 2 : 1;
  p.conclusion.rhs_instance = swap ? 1 : 2;
  p.conclusion.goal = p.goals[pick(p.goals.size())];
  if (p.goals.size() == 2) {
    const double r = u01(rng);
    p.conclusion.kind = r < 0.33   ? Conclusion::Kind::likelihood_ge
                        : r < 0.66 ? Conclusion::Kind::posterior_ge
                                   : Conclusion::Kind::two_goal_entropy_ge;
  } else {
    p.conclusion.kind = Conclusion::Kind::likelihood_ge;
  }
  return out;
}

/// True if every premise holds on concrete feature vectors x[instance][goal]. Missing
/// values are unconstrained.
inline bool premises_hold(const ogrit::ModelSet& models, const ogrit::Proposition& prop,
                          const std::vector<std::vector<ogrit::FeatureVector>>& x) {
  const auto& cat = models.catalog;
  for (const auto& p : prop.premises) {
    for (std::size_t k = 0; k < prop.goals.size(); ++k) {
      if (p.goal && prop.goals[k] != *p.goal) continue;
      if (p.kind == ogrit::Premise::Kind::eq_across) {
        for (std::size_t f : p.features) {
          const auto a = x[0][k].get(cat, f);
          const auto b = x[1][k].get(cat, f);
          if (a && b && *a != *b) return false;  // a missing value may take any hidden value
        }
      } else {
        const auto v = x[static_cast<std::size_t>(p.instance - 1)][k].get(cat, p.features.front());
        if (v && *v != p.value) return false;
      }
    }
  }
  return true;
}

}  // namespace fixtures

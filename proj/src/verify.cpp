#include "ogrit/verify.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ogrit/inference.hpp"

namespace ogrit {

namespace {

using nlohmann::json;

// Slack on >= comparisons so rounding in the posterior cannot refute a proposition.
constexpr double kTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string_view kind_name(Premise::Kind k) {
  switch (k) {
    case Premise::Kind::eq_across: return "eq_across";
    case Premise::Kind::fix: return "fix";
    case Premise::Kind::indicator: return "indicator";
  }
  return "";
}

std::string_view kind_name(Conclusion::Kind k) {
  switch (k) {
    case Conclusion::Kind::likelihood_ge: return "likelihood_ge";
    case Conclusion::Kind::posterior_ge: return "posterior_ge";
    case Conclusion::Kind::two_goal_entropy_ge: return "two_goal_entropy_ge";
  }
  return "";
}

// Accepts either the indicator's own name or the feature it stands for.
std::size_t indicator_index(const FeatureCatalog& cat, const std::string& name) {
  const std::size_t f = cat.index(name);
  if (cat.is_indicator(f)) return f;
  if (cat.is_possibly_missing(f)) return cat.indicator_of(f);
  throw UnsupportedConstraintError("feature '" + name + "' has no missing indicator");
}

struct Interval {
  double lo{-kInf};
  double hi{kInf};
  bool lo_open{false};
  bool hi_open{false};

  void above(double c) {  // x > c
    if (c > lo || (c == lo && !lo_open)) {
      lo = c;
      lo_open = true;
    }
  }
  void at_most(double c) {  // x <= c
    if (c < hi) {
      hi = c;
      hi_open = false;
    }
  }
  void at_least(double c) {
    if (c > lo) {
      lo = c;
      lo_open = false;
    }
  }
  void below(double c) {  // x < c
    if (c < hi || (c == hi && !hi_open)) {
      hi = c;
      hi_open = true;
    }
  }
  void intersect(const Interval& o) {
    if (o.lo_open) above(o.lo);
    else at_least(o.lo);
    if (o.hi_open) below(o.hi);
    else at_most(o.hi);
  }

  [[nodiscard]] double int_min() const { return lo_open ? std::floor(lo) + 1.0 : std::ceil(lo); }
  [[nodiscard]] double int_max() const { return hi_open ? std::ceil(hi) - 1.0 : std::floor(hi); }

  [[nodiscard]] bool feasible(FeatureKind kind) const {
    if (kind == FeatureKind::scalar) return lo < hi || (lo == hi && !lo_open && !hi_open);
    return int_min() <= int_max();
  }

  // Midpoint of the interval; unbounded sides use the finite bound +- 1.
  [[nodiscard]] double witness(FeatureKind kind) const {
    double mid = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) mid = lo == hi ? lo : 0.5 * (lo + hi);
    else if (std::isfinite(lo)) mid = lo + 1.0;
    else if (std::isfinite(hi)) mid = hi - 1.0;
    if (kind == FeatureKind::scalar) return mid;
    if (kind == FeatureKind::binary) return int_min();
    return std::clamp(std::floor(mid), int_min(), int_max());
  }
};

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct PathTest {
  std::size_t feature;
  bool greater;
  double threshold;
};

struct Leaf {
  std::vector<PathTest> tests;
  double likelihood;
};

std::vector<Leaf> leaves_of(const GoalTree& tree) {
  std::vector<Leaf> out;
  std::vector<PathTest> path;
  auto walk = [&](auto&& self, int id) -> void {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(id));
    if (n.leaf) {
      out.push_back({path, n.likelihood});
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    path.push_back({f, true, n.threshold});
    self(self, n.true_child);
    path.back().greater = false;
    self(self, n.false_child);
    path.pop_back();
  };
  walk(walk, 0);
  return out;
}

// Variables are (instance, goal, feature) triples flattened to one index.
struct Layout {
  std::size_t n_goals;
  std::size_t n_features;
  [[nodiscard]] std::size_t var(int instance, std::size_t goal, std::size_t f) const {
    return (static_cast<std::size_t>(instance - 1) * n_goals + goal) * n_features + f;
  }
  [[nodiscard]] std::size_t size(int instances) const {
    return static_cast<std::size_t>(instances) * n_goals * n_features;
  }
};

std::vector<std::size_t> goal_indices(const Proposition& prop, const std::optional<GoalType>& goal) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < prop.goals.size(); ++k) {
    if (!goal || prop.goals[k] == *goal) out.push_back(k);
  }
  return out;
}

std::size_t goal_position(const Proposition& prop, GoalType g) {
  for (std::size_t k = 0; k < prop.goals.size(); ++k) {
    if (prop.goals[k] == g) return k;
  }
  throw ValidationError("conclusion goal " + std::string(to_string(g)) + " is not among the proposition's goals");
}

// The (instance, goal) trees the conclusion depends on.
std::vector<std::pair<int, std::size_t>> relevant_trees(const Proposition& prop) {
  const auto& c = prop.conclusion;
  std::vector<std::pair<int, std::size_t>> out;
  if (c.kind == Conclusion::Kind::likelihood_ge) {
    const std::size_t g = goal_position(prop, c.goal);
    out.emplace_back(c.lhs_instance, g);
    if (c.rhs_instance != c.lhs_instance) out.emplace_back(c.rhs_instance, g);
    return out;
  }
  for (std::size_t k = 0; k < prop.goals.size(); ++k) out.emplace_back(c.lhs_instance, k);
  if (c.rhs_instance != c.lhs_instance) {
    for (std::size_t k = 0; k < prop.goals.size(); ++k) out.emplace_back(c.rhs_instance, k);
  }
  return out;
}

// Conclusion on per-(instance, goal) likelihoods.
ConclusionValue decide(const Proposition& prop, const std::vector<std::vector<double>>& lik) {
  const auto& c = prop.conclusion;
  const auto a = static_cast<std::size_t>(c.lhs_instance - 1);
  const auto b = static_cast<std::size_t>(c.rhs_instance - 1);
  ConclusionValue out;
  if (c.kind == Conclusion::Kind::likelihood_ge) {
    const std::size_t g = goal_position(prop, c.goal);
    out.lhs = lik[a][g];
    out.rhs = lik[b][g];
    out.holds = out.lhs >= out.rhs - kTol;
    return out;
  }
  const auto priors = prop.prior_vector();
  const auto pa = posterior(lik[a], priors);
  const auto pb = posterior(lik[b], priors);
  if (c.kind == Conclusion::Kind::posterior_ge) {
    const std::size_t g = goal_position(prop, c.goal);
    out.lhs = pa[g];
    out.rhs = pb[g];
    out.holds = out.lhs >= out.rhs - kTol;
    return out;
  }
  // The goal most probable at lhs must be at least as probable at rhs.
  if (pa[0] == pa[1]) {
    out.lhs = out.rhs = pa[0];
    return out;
  }
  const std::size_t top = pa[0] > pa[1] ? 0 : 1;
  out.lhs = pa[top];
  out.rhs = pb[top];
  out.holds = out.rhs >= out.lhs - kTol;
  return out;
}

class Checker {
 public:
  Checker(const ModelSet& models, const Proposition& prop)
      : models_(models), prop_(prop), cat_(models.catalog), layout_{prop.goals.size(), cat_.size()} {
    const std::size_t n = layout_.size(prop.instances);
    UnionFind uf(n);
    for (const auto& p : prop.premises) {
      if (p.kind != Premise::Kind::eq_across) continue;
      for (std::size_t k : goal_indices(prop, p.goal)) {
        for (std::size_t f : p.features) uf.unite(layout_.var(1, k, f), layout_.var(2, k, f));
      }
    }
    cls_.resize(n);
    for (std::size_t v = 0; v < n; ++v) cls_[v] = uf.find(v);

    base_.assign(n, Interval{});
    for (int i = 1; i <= prop.instances; ++i) {
      for (std::size_t k = 0; k < prop.goals.size(); ++k) {
        for (std::size_t f = 0; f < cat_.size(); ++f) {
          const auto& info = cat_.info(f);
          Interval& iv = base_[cls_[layout_.var(i, k, f)]];
          iv.at_least(info.lower);
          iv.at_most(info.upper);
          if (models.oracle && cat_.is_indicator(f)) iv.at_most(0.0);
        }
      }
    }
    for (const auto& p : prop.premises) {
      if (p.kind == Premise::Kind::eq_across) continue;
      for (std::size_t k : goal_indices(prop, p.goal)) {
        Interval& iv = base_[cls_[layout_.var(p.instance, k, p.features.front())]];
        iv.at_least(p.value);
        iv.at_most(p.value);
      }
    }

    for (const auto& [inst, k] : relevant_trees(prop)) {
      trees_.push_back({inst, k, leaves_of(models.tree(prop.goals[k]))});
    }
  }

  VerificationResult run() {
    VerificationResult out;
    if (!feasible(base_)) return out;  // premises contradict each other: vacuously true
    lik_.assign(static_cast<std::size_t>(prop_.instances), std::vector<double>(prop_.goals.size(), 1.0));
    search(0, base_, out);
    return out;
  }

 private:
  struct TreeSlot {
    int instance;
    std::size_t goal;
    std::vector<Leaf> leaves;
  };

  bool feasible(const std::vector<Interval>& ivs) const {
    for (std::size_t v = 0; v < ivs.size(); ++v) {
      if (cls_[v] == v && !ivs[v].feasible(cat_.info(v % layout_.n_features).kind)) return false;
    }
    return true;
  }

  bool search(std::size_t depth, const std::vector<Interval>& ivs, VerificationResult& out) {
    if (depth == trees_.size()) {
      ++out.regions;
      const auto value = decide(prop_, lik_);
      if (value.holds) return false;
      out.verified = false;
      out.value = value;
      out.counterexample = witness(ivs);
      return true;
    }
    const auto& slot = trees_[depth];
    for (const auto& leaf : slot.leaves) {
      auto next = ivs;
      bool ok = true;
      for (const auto& t : leaf.tests) {
        const std::size_t c = cls_[layout_.var(slot.instance, slot.goal, t.feature)];
        if (t.greater) next[c].above(t.threshold);
        else next[c].at_most(t.threshold);
        if (!next[c].feasible(cat_.info(t.feature).kind)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      lik_[static_cast<std::size_t>(slot.instance - 1)][slot.goal] = leaf.likelihood;
      if (search(depth + 1, next, out)) return true;
    }
    return false;
  }

  std::vector<std::vector<FeatureVector>> witness(const std::vector<Interval>& ivs) const {
    std::vector<std::vector<FeatureVector>> out(static_cast<std::size_t>(prop_.instances));
    for (int i = 1; i <= prop_.instances; ++i) {
      for (std::size_t k = 0; k < prop_.goals.size(); ++k) {
        auto value = [&](std::size_t f) {
          return ivs[cls_[layout_.var(i, k, f)]].witness(cat_.info(f).kind);
        };
        BaseValues base(cat_.base_count());
        IndicatorValues ind(cat_.missing_count());
        for (std::size_t f = 0; f < cat_.base_count(); ++f) {
          if (cat_.is_possibly_missing(f)) {
            const bool missing = value(cat_.indicator_of(f)) > 0.5;
            ind[f - cat_.always_count()] = missing;
            if (missing) continue;
          }
          base[f] = value(f);
        }
        out[static_cast<std::size_t>(i - 1)].push_back(assemble(std::move(base), std::move(ind), cat_));
      }
    }
    return out;
  }

  const ModelSet& models_;
  const Proposition& prop_;
  const FeatureCatalog& cat_;
  Layout layout_;
  std::vector<std::size_t> cls_;
  std::vector<Interval> base_;
  std::vector<TreeSlot> trees_;
  std::vector<std::vector<double>> lik_;
};

}  // namespace

void Proposition::validate(const FeatureCatalog& catalog) const {
  if (instances != 1 && instances != 2) throw ValidationError("a proposition has 1 or 2 instances");
  if (goals.empty()) throw ValidationError("a proposition needs at least one goal");
  if (std::set<GoalType>(goals.begin(), goals.end()).size() != goals.size()) {
    throw ValidationError("proposition goals must be distinct goal types");
  }
  if (!priors.empty()) {
    if (priors.size() != goals.size()) throw ValidationError("one prior per goal expected");
    (void)posterior(std::vector<double>(goals.size(), 1.0), priors);  // validates the priors
  }
  auto check_instance = [&](int i) {
    if (i < 1 || i > instances) throw ValidationError("instance " + std::to_string(i) + " out of range");
  };
  for (const auto& p : premises) {
    if (p.goal && std::find(goals.begin(), goals.end(), *p.goal) == goals.end()) {
      throw ValidationError("premise goal " + std::string(to_string(*p.goal)) + " is not among the goals");
    }
    for (std::size_t f : p.features) {
      if (f >= catalog.size()) throw ValidationError("premise feature index out of range");
    }
    if (p.kind == Premise::Kind::eq_across) {
      if (instances != 2) throw UnsupportedConstraintError("eq_across needs two instances");
      continue;
    }
    check_instance(p.instance);
    if (p.features.size() != 1) throw ValidationError("fix and indicator premises name one feature");
    const std::size_t f = p.features.front();
    const auto& info = catalog.info(f);
    if (p.kind == Premise::Kind::indicator && !catalog.is_indicator(f)) {
      throw UnsupportedConstraintError("'" + info.name + "' is not a missing indicator");
    }
    if (!std::isfinite(p.value) || p.value < info.lower || p.value > info.upper) {
      throw ValidationError("value for '" + info.name + "' outside its bounds");
    }
    if (info.kind != FeatureKind::scalar && p.value != std::round(p.value)) {
      throw ValidationError("value for '" + info.name + "' must be integral");
    }
  }
  const auto& c = conclusion;
  check_instance(c.lhs_instance);
  check_instance(c.rhs_instance);
  if (c.kind == Conclusion::Kind::two_goal_entropy_ge) {
    if (goals.size() != 2) throw UnsupportedConstraintError("entropy conclusions are supported for two goals only");
  } else {
    (void)goal_position(*this, c.goal);
  }
}

std::vector<double> Proposition::prior_vector() const {
  if (!priors.empty()) return priors;
  return uniform_prior(goals.size());
}

Proposition proposition_from_json_text(const std::string& text, const FeatureCatalog& catalog) {
  Proposition prop;
  try {
    const json doc = json::parse(text);
    prop.name = doc.value("name", "");
    prop.instances = doc.value("instances", 2);
    for (const auto& g : doc.at("goals")) prop.goals.push_back(goal_type_from_string(g.get<std::string>()));
    if (doc.contains("priors")) prop.priors = doc.at("priors").get<std::vector<double>>();
    for (const auto& p : doc.at("premises")) {
      Premise out;
      const std::string kind = p.at("kind").get<std::string>();
      if (p.contains("goal")) out.goal = goal_type_from_string(p.at("goal").get<std::string>());
      if (kind == "eq_across") {
        out.kind = Premise::Kind::eq_across;
        const std::string name = p.at("feature").get<std::string>();
        if (name == "*") {
          std::set<std::size_t> except;
          for (const auto& e : p.value("except", json::array())) except.insert(catalog.index(e.get<std::string>()));
          for (std::size_t f = 0; f < catalog.size(); ++f) {
            if (!except.contains(f)) out.features.push_back(f);
          }
        } else {
          if (p.contains("except")) throw UnsupportedConstraintError("'except' only applies to feature \"*\"");
          out.features.push_back(catalog.index(name));
        }
      } else if (kind == "fix") {
        out.kind = Premise::Kind::fix;
        out.instance = p.at("instance").get<int>();
        out.features.push_back(catalog.index(p.at("feature").get<std::string>()));
        const auto& v = p.at("value");
        out.value = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
      } else if (kind == "indicator") {
        out.kind = Premise::Kind::indicator;
        out.instance = p.at("instance").get<int>();
        out.features.push_back(indicator_index(catalog, p.at("feature").get<std::string>()));
        out.value = p.at("value").get<bool>() ? 1.0 : 0.0;
      } else {
        throw UnsupportedConstraintError("unsupported premise kind '" + kind + "'");
      }
      prop.premises.push_back(std::move(out));
    }
    const auto& c = doc.at("conclusion");
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "likelihood_ge") prop.conclusion.kind = Conclusion::Kind::likelihood_ge;
    else if (kind == "posterior_ge") prop.conclusion.kind = Conclusion::Kind::posterior_ge;
    else if (kind == "two_goal_entropy_ge") prop.conclusion.kind = Conclusion::Kind::two_goal_entropy_ge;
    else throw UnsupportedConstraintError("unsupported conclusion kind '" + kind + "'");
    if (c.contains("goal")) prop.conclusion.goal = goal_type_from_string(c.at("goal").get<std::string>());
    prop.conclusion.lhs_instance = c.value("lhs_instance", 1);
    prop.conclusion.rhs_instance = c.value("rhs_instance", 2);
  } catch (const json::exception& e) {
    throw ParseError(std::string("proposition: ") + e.what());
  }
  prop.validate(catalog);
  return prop;
}

Proposition load_proposition(const std::filesystem::path& path, const FeatureCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open proposition " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return proposition_from_json_text(buf.str(), catalog);
}

std::string proposition_to_json_text(const Proposition& prop, const FeatureCatalog& catalog) {
  json doc;
  doc["name"] = prop.name;
  doc["instances"] = prop.instances;
  doc["goals"] = json::array();
  for (GoalType g : prop.goals) doc["goals"].push_back(to_string(g));
  if (!prop.priors.empty()) doc["priors"] = prop.priors;
  doc["premises"] = json::array();
  for (const auto& p : prop.premises) {
    json out;
    out["kind"] = kind_name(p.kind);
    if (p.kind == Premise::Kind::eq_across) {
      if (p.features.size() == 1) {
        out["feature"] = catalog.name(p.features.front());
      } else {
        out["feature"] = "*";
        json except = json::array();
        for (std::size_t f = 0; f < catalog.size(); ++f) {
          if (std::find(p.features.begin(), p.features.end(), f) == p.features.end()) except.push_back(catalog.name(f));
        }
        out["except"] = except;
      }
    } else {
      out["instance"] = p.instance;
      out["feature"] = catalog.name(p.features.front());
      if (p.kind == Premise::Kind::indicator) out["value"] = p.value > 0.5;
      else out["value"] = p.value;
    }
    if (p.goal) out["goal"] = to_string(*p.goal);
    doc["premises"].push_back(out);
  }
  json c;
  c["kind"] = kind_name(prop.conclusion.kind);
  if (prop.conclusion.kind != Conclusion::Kind::two_goal_entropy_ge) c["goal"] = to_string(prop.conclusion.goal);
  c["lhs_instance"] = prop.conclusion.lhs_instance;
  c["rhs_instance"] = prop.conclusion.rhs_instance;
  doc["conclusion"] = c;
  return doc.dump(1) + "\n";
}

Proposition builtin_proposition(int number) {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  auto all_except = [&](std::initializer_list<std::string_view> names) {
    Premise p;
    p.kind = Premise::Kind::eq_across;
    std::set<std::size_t> skip;
    for (auto n : names) skip.insert(cat.index(n));
    for (std::size_t f = 0; f < cat.size(); ++f) {
      if (!skip.contains(f)) p.features.push_back(f);
    }
    return p;
  };
  auto premise = [&](Premise::Kind kind, int instance, std::string_view name, double value) {
    Premise p;
    p.kind = kind;
    p.instance = instance;
    p.features = {cat.index(name)};
    p.value = value;
    return p;
  };
  const std::string dist_ind = indicator_name(feature::dist_oncoming);
  const std::string speed_ind = indicator_name(feature::speed_oncoming);
  const std::string exit_ind = indicator_name(feature::roundabout_exit_number);
  using K = Premise::Kind;

  Proposition prop;
  switch (number) {
    case 1:
      prop.name = "entropy-oncoming-occluded";
      prop.goals = {GoalType::straight_on, GoalType::exit_left};
      prop.premises = {premise(K::indicator, 1, dist_ind, 1), premise(K::indicator, 1, speed_ind, 1),
                       premise(K::indicator, 2, dist_ind, 0), premise(K::indicator, 2, speed_ind, 0),
                       all_except({dist_ind, speed_ind})};
      prop.conclusion = {Conclusion::Kind::two_goal_entropy_ge, GoalType::straight_on, 1, 2};
      break;
    case 2:
      prop.name = "stopped-at-junction-oncoming-occluded";
      prop.goals = {GoalType::enter_right, GoalType::enter_left};
      prop.premises = {premise(K::fix, 1, feature::speed, 0),
                       premise(K::fix, 1, feature::angle_in_lane, 0),
                       premise(K::indicator, 1, dist_ind, 1),
                       premise(K::indicator, 1, speed_ind, 1),
                       premise(K::indicator, 2, dist_ind, 0),
                       premise(K::indicator, 2, speed_ind, 0),
                       premise(K::fix, 2, feature::dist_oncoming, 100),
                       premise(K::fix, 2, feature::speed_oncoming, 0),
                       all_except({dist_ind, speed_ind})};
      prop.conclusion = {Conclusion::Kind::posterior_ge, GoalType::enter_right, 1, 2};
      break;
    case 3:
      prop.name = "roundabout-exit-four-occluded";
      prop.goals = {GoalType::exit_roundabout};
      prop.premises = {premise(K::fix, 1, feature::path_to_goal_length, 50),
                       premise(K::fix, 1, feature::angle_in_lane, 0),
                       premise(K::fix, 2, feature::roundabout_exit_number, 4),
                       premise(K::indicator, 1, exit_ind, 1),
                       premise(K::indicator, 2, exit_ind, 0),
                       all_except({exit_ind})};
      prop.conclusion = {Conclusion::Kind::likelihood_ge, GoalType::exit_roundabout, 1, 2};
      break;
    default:
      throw ValidationError("built-in propositions are numbered 1 to 3");
  }
  prop.validate(cat);
  return prop;
}

ConclusionValue evaluate_conclusion(const ModelSet& models, const Proposition& prop,
                                    const std::vector<std::vector<FeatureVector>>& x) {
  if (x.size() != static_cast<std::size_t>(prop.instances)) throw ValidationError("one input set per instance expected");
  std::vector<std::vector<double>> lik(x.size(), std::vector<double>(prop.goals.size(), 1.0));
  for (const auto& [inst, k] : relevant_trees(prop)) {
    const auto i = static_cast<std::size_t>(inst - 1);
    if (x[i].size() != prop.goals.size()) throw ValidationError("one feature vector per goal expected");
    lik[i][k] = infer_likelihood(models.tree(prop.goals[k]), x[i][k]);
  }
  return decide(prop, lik);
}

VerificationResult check(const ModelSet& models, const Proposition& prop) {
  prop.validate(models.catalog);
  for (GoalType g : prop.goals) (void)models.tree(g);
  VerificationResult result = Checker(models, prop).run();
  if (!result.verified) {
    const auto replay = evaluate_conclusion(models, prop, *result.counterexample);
    if (replay.holds) throw ContractViolation("verification counterexample does not falsify the conclusion");
    result.value = replay;
  }
  return result;
}

}  // namespace ogrit

#include <charconv>
#include <fstream>
#include <sstream>

#include "ogrit/verify.hpp"

namespace ogrit {

namespace {

// SMT-LIB decimal: no exponent, negatives as (- x).
std::string decimal(double v) {
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), std::abs(v), std::chars_format::fixed);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos) s += ".0";
  return v < 0 ? "(- " + s + ")" : s;
}

std::string integer(double v) {
  const auto n = static_cast<long long>(std::llround(v));
  return n < 0 ? "(- " + std::to_string(-n) + ")" : std::to_string(n);
}

class Emitter {
 public:
  Emitter(const ModelSet& models, const Proposition& prop) : models_(models), prop_(prop), cat_(models.catalog) {}

  std::string run() {
    out_ << "; " << (prop_.name.empty() ? "proposition" : prop_.name) << "\n";
    out_ << "; unsat means the proposition holds for every input\n";
    out_ << "(set-logic QF_NIRA)\n";
    for (int i = 1; i <= prop_.instances; ++i) {
      for (std::size_t k = 0; k < prop_.goals.size(); ++k) declare(i, k);
    }
    for (int i = 1; i <= prop_.instances; ++i) {
      for (std::size_t k = 0; k < prop_.goals.size(); ++k) define_likelihood(i, k);
    }
    for (const auto& p : prop_.premises) premise(p);
    out_ << "(assert (not " << conclusion() << "))\n";
    out_ << "(check-sat)\n";
    return out_.str();
  }

 private:
  [[nodiscard]] std::string var(int instance, std::size_t goal, std::size_t f) const {
    return "|" + cat_.name(f) + "@" + std::string(to_string(prop_.goals[goal])) + "@t" + std::to_string(instance) + "|";
  }
  [[nodiscard]] std::string lik(int instance, std::size_t goal) const {
    return "|L@" + std::string(to_string(prop_.goals[goal])) + "@t" + std::to_string(instance) + "|";
  }
  [[nodiscard]] std::string constant(std::size_t f, double v) const {
    switch (cat_.info(f).kind) {
      case FeatureKind::binary: return v > 0.5 ? "true" : "false";
      case FeatureKind::integer: return integer(v);
      case FeatureKind::scalar: break;
    }
    return decimal(v);
  }

  void declare(int i, std::size_t k) {
    for (std::size_t f = 0; f < cat_.size(); ++f) {
      const auto& info = cat_.info(f);
      const std::string x = var(i, k, f);
      switch (info.kind) {
        case FeatureKind::binary:
          out_ << "(declare-const " << x << " Bool)\n";
          if (models_.oracle && cat_.is_indicator(f)) out_ << "(assert (not " << x << "))\n";
          break;
        case FeatureKind::integer:
          out_ << "(declare-const " << x << " Int)\n";
          out_ << "(assert (<= " << integer(info.lower) << " " << x << " " << integer(info.upper) << "))\n";
          break;
        case FeatureKind::scalar:
          out_ << "(declare-const " << x << " Real)\n";
          out_ << "(assert (<= " << decimal(info.lower) << " " << x << " " << decimal(info.upper) << "))\n";
          break;
      }
    }
  }

  std::string test(int i, std::size_t k, const DecisionNode& n) const {
    const auto f = static_cast<std::size_t>(n.feature);
    const std::string x = var(i, k, f);
    switch (cat_.info(f).kind) {
      case FeatureKind::binary: return x;  // thresholds on binary features are 0.5
      case FeatureKind::integer: return "(> (to_real " + x + ") " + decimal(n.threshold) + ")";
      case FeatureKind::scalar: break;
    }
    return "(> " + x + " " + decimal(n.threshold) + ")";
  }

  std::string subtree(int i, std::size_t k, const GoalTree& tree, int id) const {
    const auto& n = tree.nodes.at(static_cast<std::size_t>(id));
    if (n.leaf) return decimal(n.likelihood);
    return "(ite " + test(i, k, n) + " " + subtree(i, k, tree, n.true_child) + " " +
           subtree(i, k, tree, n.false_child) + ")";
  }

  void define_likelihood(int i, std::size_t k) {
    const GoalTree& tree = models_.tree(prop_.goals[k]);
    out_ << "(define-fun " << lik(i, k) << " () Real " << subtree(i, k, tree, 0) << ")\n";
  }

  void premise(const Premise& p) {
    std::vector<std::size_t> goals;
    for (std::size_t k = 0; k < prop_.goals.size(); ++k) {
      if (!p.goal || prop_.goals[k] == *p.goal) goals.push_back(k);
    }
    for (std::size_t k : goals) {
      if (p.kind == Premise::Kind::eq_across) {
        for (std::size_t f : p.features) out_ << "(assert (= " << var(1, k, f) << " " << var(2, k, f) << "))\n";
        continue;
      }
      const std::size_t f = p.features.front();
      out_ << "(assert (= " << var(p.instance, k, f) << " " << constant(f, p.value) << "))\n";
    }
  }

  // Weighted evidence prior_j * L_j summed over goals.
  [[nodiscard]] std::string evidence(int i) const {
    const auto priors = prop_.prior_vector();
    std::string s = "(+";
    for (std::size_t k = 0; k < prop_.goals.size(); ++k) {
      s += " (* " + decimal(priors[k]) + " " + lik(i, k) + ")";
    }
    return s + ")";
  }

  // P(g | x_a) >= P(g | x_b), cross-multiplied over the positive evidence sums.
  [[nodiscard]] std::string posterior_ge(std::size_t g, int a, int b) const {
    return "(>= (* " + lik(a, g) + " " + evidence(b) + ") (* " + lik(b, g) + " " + evidence(a) + "))";
  }

  std::string conclusion() const {
    const auto& c = prop_.conclusion;
    const int a = c.lhs_instance;
    const int b = c.rhs_instance;
    auto goal_index = [&](GoalType g) {
      return static_cast<std::size_t>(std::find(prop_.goals.begin(), prop_.goals.end(), g) - prop_.goals.begin());
    };
    switch (c.kind) {
      case Conclusion::Kind::likelihood_ge: {
        const std::size_t g = goal_index(c.goal);
        return "(>= " + lik(a, g) + " " + lik(b, g) + ")";
      }
      case Conclusion::Kind::posterior_ge:
        return posterior_ge(goal_index(c.goal), a, b);
      case Conclusion::Kind::two_goal_entropy_ge: break;
    }
    const auto priors = prop_.prior_vector();
    const std::string w0 = "(* " + decimal(priors[0]) + " " + lik(a, 0) + ")";
    const std::string w1 = "(* " + decimal(priors[1]) + " " + lik(a, 1) + ")";
    return "(and (=> (< " + w0 + " " + w1 + ") " + posterior_ge(1, b, a) + ") (=> (> " + w0 + " " + w1 + ") " +
           posterior_ge(0, b, a) + "))";
  }

  const ModelSet& models_;
  const Proposition& prop_;
  const FeatureCatalog& cat_;
  std::ostringstream out_;
};

}  // namespace

std::string emit_smtlib(const ModelSet& models, const Proposition& prop) {
  prop.validate(models.catalog);
  for (GoalType g : prop.goals) (void)models.tree(g);
  return Emitter(models, prop).run();
}

void write_smtlib(const ModelSet& models, const Proposition& prop, const std::filesystem::path& path) {
  const std::string text = emit_smtlib(models, prop);
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write " + path.string());
  out << text;
  if (!out) throw OgritError("failed writing " + path.string());
}

}  // namespace ogrit

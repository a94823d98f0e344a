#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ogrit/dtree.hpp"
#include "ogrit/features.hpp"

namespace ogrit {

/// A proposition uses a constraint form the checker cannot decide.
struct UnsupportedConstraintError : ValidationError {
  using ValidationError::ValidationError;
};

struct Premise {
  enum class Kind { eq_across, fix, indicator };
  Kind kind{Kind::fix};
  std::vector<std::size_t> features;  // eq_across: every feature equated; fix/indicator: exactly one
  int instance{1};                    // fix/indicator only
  double value{0.0};                  // indicator premises hold 0 or 1
  std::optional<GoalType> goal;       // restricts to one goal; nullopt = every goal
};

struct Conclusion {
  enum class Kind { likelihood_ge, posterior_ge, two_goal_entropy_ge };
  Kind kind{Kind::likelihood_ge};
  GoalType goal{GoalType::straight_on};  // unused by the entropy form
  int lhs_instance{1};
  int rhs_instance{2};
};

/// Premises are a conjunction over the feature vectors x[instance][goal]. Conclusions:
///   likelihood_ge        L(x[lhs][g] | g) >= L(x[rhs][g] | g)
///   posterior_ge         P(g | x[lhs]) >= P(g | x[rhs])
///   two_goal_entropy_ge  H(x[lhs]) >= H(x[rhs]), as "the goal most probable at lhs is at
///                        least as probable at rhs" (two goals only)
struct Proposition {
  std::string name;
  int instances{2};
  std::vector<GoalType> goals;
  std::vector<double> priors;  // empty = uniform
  std::vector<Premise> premises;
  Conclusion conclusion;

  /// Throws ValidationError (or UnsupportedConstraintError) on malformed input.
  void validate(const FeatureCatalog& catalog) const;
  [[nodiscard]] std::vector<double> prior_vector() const;
};

Proposition proposition_from_json_text(const std::string& text,
                                       const FeatureCatalog& catalog = FeatureCatalog::standard());
Proposition load_proposition(const std::filesystem::path& path,
                             const FeatureCatalog& catalog = FeatureCatalog::standard());
std::string proposition_to_json_text(const Proposition& prop, const FeatureCatalog& catalog = FeatureCatalog::standard());

/// The three shipped propositions: 1 = entropy with oncoming vehicles occluded,
/// 2 = stopped at a junction with oncoming vehicles occluded, 3 = roundabout exit
/// number four versus occluded.
Proposition builtin_proposition(int number);

/// Outcome of a conclusion on concrete inputs.
struct ConclusionValue {
  bool holds{true};
  double lhs{0.0};
  double rhs{0.0};
};

/// Evaluates the conclusion with infer_likelihood and posterior. `x[i][k]` is instance
/// i + 1, goal prop.goals[k].
ConclusionValue evaluate_conclusion(const ModelSet& models, const Proposition& prop,
                                    const std::vector<std::vector<FeatureVector>>& x);

struct VerificationResult {
  bool verified{true};
  std::optional<std::vector<std::vector<FeatureVector>>> counterexample;  // [instance][goal]
  ConclusionValue value;     // at the counterexample when refuted
  std::size_t regions{0};    // satisfiable leaf tuples examined
};

/// Complete decision over the trees' leaf partition. With oracle models every indicator
/// is taken as false.
VerificationResult check(const ModelSet& models, const Proposition& prop);

/// SMT-LIB v2 script asserting the tree semantics, the premises and the negated
/// conclusion; `unsat` means the proposition holds.
std::string emit_smtlib(const ModelSet& models, const Proposition& prop);
void write_smtlib(const ModelSet& models, const Proposition& prop, const std::filesystem::path& path);

}  // namespace ogrit

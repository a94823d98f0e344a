#include "ogrit/inference.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace ogrit {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

FeatureSettings settings_for(const PipelineOptions& options) {
  FeatureSettings s;
  s.max_depth = options.goal_depth;
  s.reveal_all = options.reveal_all;
  return s;
}

}  // namespace

std::vector<double> posterior(std::span<const double> likelihoods, std::span<const double> priors) {
  if (likelihoods.empty() || likelihoods.size() != priors.size()) {
    throw ContractViolation("posterior needs equal, non-zero numbers of likelihoods and priors");
  }
  double prior_sum = 0.0;
  for (double p : priors) {
    if (!(p > 0.0)) throw ValidationError("priors must be positive");
    prior_sum += p;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) throw ValidationError("priors must sum to 1");
  std::vector<double> out(likelihoods.size());
  double z = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(likelihoods[k] >= 0.0)) throw ValidationError("likelihoods must be non-negative");
    out[k] = likelihoods[k] * priors[k];
    z += out[k];
  }
  if (!(z > 0.0)) throw OgritError("degenerate posterior: all goals have zero weight");
  for (double& p : out) p /= z;
  return out;
}

std::vector<double> uniform_prior(std::size_t n) {
  if (n == 0) throw ContractViolation("uniform prior over zero goals");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

double entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double p : distribution) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

Pipeline::Pipeline(const StaticScene& scene, const ModelSet& models, PipelineOptions options)
    : scene_(&scene), models_(&models), options_(options), extractor_(scene, settings_for(options)) {}

OccludedRegionSet Pipeline::occlusions_for(const Observation& latest) const {
  if (options_.reveal_all) return OccludedRegionSet::none();
  return compute_occluded_regions(latest.visible, *scene_, latest.ego, options_.sensor_range);
}

GoalPosterior Pipeline::run(std::span<const Observation> history, VehicleId target,
                            PipelineTiming* timing) const {
  const auto start = Clock::now();
  if (history.empty()) throw ContractViolation("pipeline needs a non-empty history");
  const Observation& latest = history.back();
  const VehicleState* state = latest.find(target);
  if (!state) throw ContractViolation("target " + std::to_string(target) + " not visible to the ego");

  auto t0 = Clock::now();
  const OccludedRegionSet occ = occlusions_for(latest);
  const double occ_ms = ms_since(t0);

  t0 = Clock::now();
  const GoalSet goals = generate_goals(*state, *scene_, options_.goal_depth);
  const double goals_ms = ms_since(t0);

  GoalPosterior out;
  out.vehicle = target;
  out.time = latest.time;
  t0 = Clock::now();
  for (const auto& goal : goals.goals) {
    GoalPosterior::Entry e;
    e.goal = goal;
    e.features = extractor_.extract(history, target, goal, occ);
    out.entries.push_back(std::move(e));
  }
  const double features_ms = ms_since(t0);

  t0 = Clock::now();
  std::vector<double> likelihoods;
  for (auto& e : out.entries) {
    const auto it = models_->trees.find(e.goal.type);
    if (it == models_->trees.end()) {
      throw OgritError("missing model for goal type " + std::string(to_string(e.goal.type)));
    }
    e.likelihood = infer_likelihood(it->second, e.features);
    likelihoods.push_back(e.likelihood);
  }
  const auto priors = uniform_prior(likelihoods.size());
  const auto post = posterior(likelihoods, priors);
  for (std::size_t k = 0; k < out.entries.size(); ++k) {
    out.entries[k].prior = priors[k];
    out.entries[k].posterior = post[k];
  }
  const double trees_ms = ms_since(t0);

  if (timing) {
    timing->occlusion_ms = occ_ms;
    timing->goals_ms = goals_ms;
    timing->features_ms = features_ms;
    timing->trees_ms = trees_ms;
    timing->total_ms = ms_since(start);
  }
  return out;
}

GoalPosterior run_pipeline(std::span<const Observation> history, VehicleId ego, VehicleId target,
                           const StaticScene& scene, const ModelSet& models, double sensor_range) {
  if (!history.empty() && history.back().ego != ego) {
    throw ContractViolation("history belongs to ego " + std::to_string(history.back().ego));
  }
  PipelineOptions options;
  options.sensor_range = sensor_range;
  return Pipeline(scene, models, options).run(history, target);
}

}  // namespace ogrit

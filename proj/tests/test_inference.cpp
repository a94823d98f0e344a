#include <random>

#include "doctest.h"
#include "ogrit/inference.hpp"
#include "ogrit/synthetic.hpp"

using namespace ogrit;

TEST_CASE("posterior is Bayes-normalised") {
  const std::vector<double> lik{0.2, 0.6};
  const auto p = posterior(lik, uniform_prior(2));
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.75));
  const std::vector<double> prior{0.8, 0.2};
  const auto q = posterior(lik, prior);
  CHECK(q[0] == doctest::Approx(0.16 / 0.28));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<double> l(n), pr(n);
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      l[k] = u(rng);
      pr[k] = u(rng);
      total += pr[k];
    }
    for (auto& v : pr) v /= total;
    const auto a = posterior(l, pr);
    double sum = 0;
    for (double v : a) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    const double k = u(rng) * 100.0;
    std::vector<double> scaled(l);
    for (auto& v : scaled) v *= k;
    const auto b = posterior(scaled, pr);
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-9);
  }
}

TEST_CASE("posterior input checks") {
  const std::vector<double> lik{0.5, 0.5};
  CHECK_THROWS(posterior(lik, std::vector<double>{0.5}));
  CHECK_THROWS(posterior(lik, std::vector<double>{0.7, 0.7}));   // unnormalised
  CHECK_THROWS(posterior(lik, std::vector<double>{1.0, 0.0}));   // non-positive
  CHECK_THROWS(posterior(std::vector<double>{0.0, 0.0}, uniform_prior(2)));
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(1.0));
  CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
  CHECK(entropy(uniform_prior(4)) == doctest::Approx(2.0));
}

TEST_CASE("pipeline on a target with a single goal") {
  const auto scene = make_t_junction_scene();
  ModelSet models;  // single-leaf trees with a constant likelihood
  for (GoalType t : kAllGoalTypes) {
    GoalTree tree;
    tree.goal_type = t;
    tree.nodes[0].likelihood = 0.3;
    models.trees[t] = tree;
  }
  Observation a, b;
  a.time = 0.0;
  b.time = 1.0;
  a.ego = b.ego = 1;
  a.visible[1] = VehicleState(1, 0.0, {-60, -1.75}, 0.0, 8.0, 0.0);
  b.visible[1] = VehicleState(1, 1.0, {-52, -1.75}, 0.0, 8.0, 0.0);
  a.visible[2] = VehicleState(2, 0.0, {42, -1.75}, 0.0, 8.0, 0.0);  // past the junction: one goal
  b.visible[2] = VehicleState(2, 1.0, {50, -1.75}, 0.0, 8.0, 0.0);
  const std::vector<Observation> history{a, b};
  PipelineTiming timing;
  const Pipeline pipe(scene, models);
  const auto post = pipe.run(history, 2, &timing);
  REQUIRE(post.entries.size() == 1);
  CHECK(post.entries[0].posterior == doctest::Approx(1.0));
  CHECK(timing.total_ms >= 0.0);
  CHECK(timing.total_ms + 1e-9 >= timing.trees_ms);

  const auto two = pipe.run(history, 1);
  REQUIRE(two.entries.size() == 2);
  double sum = 0;
  for (const auto& e : two.entries) {
    CHECK(e.prior == doctest::Approx(0.5));
    CHECK(e.likelihood == doctest::Approx(0.3));
    sum += e.posterior;
  }
  CHECK(sum == doctest::Approx(1.0));
  const auto same = run_pipeline(history, 1, 1, scene, models);
  CHECK(same.entries.size() == 2);
}

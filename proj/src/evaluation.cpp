#include "ogrit/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace ogrit {

void check_split(const ModelSet& models, const std::vector<std::string>& test_episodes) {
  std::vector<std::string> overlap;
  for (const auto& e : test_episodes) {
    if (std::find(models.training_episodes.begin(), models.training_episodes.end(), e) !=
        models.training_episodes.end()) {
      overlap.push_back(e);
    }
  }
  if (overlap.empty()) return;
  std::string msg = "split mismatch: test episodes used for training:";
  for (const auto& e : overlap) msg += " " + e;
  throw SplitMismatchError(msg);
}

std::vector<GroupScore> score_groups(const std::vector<Sample>& samples, const ModelSet& models, bool oracle) {
  using Key = std::tuple<std::string, std::string, double, VehicleId, VehicleId>;
  std::map<Key, std::vector<const Sample*>> groups;
  std::vector<Key> order;
  for (const auto& s : samples) {
    const auto& m = s.meta;
    Key key{m.scenario_id, m.episode_id, m.t, m.ego, m.target};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&s);
  }
  std::vector<GroupScore> out;
  out.reserve(order.size());
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    std::vector<double> lik;
    lik.reserve(members.size());
    for (const Sample* s : members) {
      const auto it = models.trees.find(s->meta.goal.type);
      if (it == models.trees.end()) {
        lik.push_back(0.5);
        continue;
      }
      const FeatureVector& x = oracle ? s->oracle_x.value() : s->x;
      lik.push_back(infer_likelihood(it->second, x));
    }
    const auto post = posterior(lik, uniform_prior(lik.size()));
    GroupScore g;
    g.scenario_id = std::get<0>(key);
    g.episode_id = std::get<1>(key);
    g.fraction = members.front()->meta.fraction;
    g.n_goals = members.size();
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (members[k]->y) {
        g.has_true_goal = true;
        g.p_true = post[k];
        g.p_uniform = 1.0 / static_cast<double>(members.size());
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

Curve make_curve(const std::vector<GroupScore>& groups, int n_bins) {
  if (n_bins < 1) throw ValidationError("curve needs at least one bin");
  Curve c;
  c.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    c.bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / n_bins;
    c.bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / n_bins;
  }
  std::size_t late = 0;
  for (const auto& g : groups) {
    const int b = std::clamp(static_cast<int>(g.fraction * n_bins), 0, n_bins - 1);
    auto& bin = c.bins[static_cast<std::size_t>(b)];
    ++bin.count;
    bin.mean_p_true += g.p_true;
    bin.mean_p_uniform += g.p_uniform;
    ++c.count;
    c.mean_p_true += g.p_true;
    c.mean_p_uniform += g.p_uniform;
    if (g.fraction >= 0.5) {
      ++late;
      c.late_mean_p_true += g.p_true;
      c.late_mean_p_uniform += g.p_uniform;
    }
  }
  for (auto& bin : c.bins) {
    if (bin.count == 0) continue;
    bin.mean_p_true /= static_cast<double>(bin.count);
    bin.mean_p_uniform /= static_cast<double>(bin.count);
  }
  if (c.count > 0) {
    c.mean_p_true /= static_cast<double>(c.count);
    c.mean_p_uniform /= static_cast<double>(c.count);
  }
  if (late > 0) {
    c.late_mean_p_true /= static_cast<double>(late);
    c.late_mean_p_uniform /= static_cast<double>(late);
  }
  return c;
}

std::map<std::string, Curve> curves_by_scenario(const std::vector<GroupScore>& groups, int n_bins) {
  std::map<std::string, std::vector<GroupScore>> split;
  for (const auto& g : groups) split[g.scenario_id].push_back(g);
  std::map<std::string, Curve> out;
  for (const auto& [id, gs] : split) out[id] = make_curve(gs, n_bins);
  out["all"] = make_curve(groups, n_bins);
  return out;
}

LatencyStats measure_latency(const std::vector<Recording>& recordings, const StaticScene& scene,
                             const ModelSet& models, const PipelineOptions& options, std::size_t max_runs) {
  const Pipeline pipe(scene, models, options);
  std::vector<double> times;
  for (const auto& rec : recordings) {
    if (rec.frames.empty()) continue;
    for (VehicleId ego : rec.vehicle_ids()) {
      const auto history = ego_history(rec, scene, ego, options.sensor_range, options.reveal_all);
      double next_tick = std::ceil(history.empty() ? 0.0 : history.front().time);
      for (std::size_t i = 0; i < history.size() && times.size() < max_runs; ++i) {
        if (history[i].time + 1e-9 < next_tick) continue;
        next_tick = std::floor(history[i].time + 1e-9) + 1.0;
        const std::span<const Observation> hist(history.data(), i + 1);
        for (const auto& [target, state] : history[i].visible) {
          if (target == ego || times.size() >= max_runs) continue;
          PipelineTiming timing;
          try {
            (void)pipe.run(hist, target, &timing);
          } catch (const OffMapError&) {
            continue;
          } catch (const ContractViolation&) {
            continue;  // target off the lane graph
          }
          times.push_back(timing.total_ms);
        }
      }
      if (times.size() >= max_runs) break;
    }
    if (times.size() >= max_runs) break;
  }
  LatencyStats out;
  out.runs = times.size();
  if (times.empty()) return out;
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  out.median_ms = n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  double sum = 0.0;
  for (double t : times) sum += t;
  out.mean_ms = sum / static_cast<double>(n);
  out.max_ms = times.back();
  return out;
}

nlohmann::json to_json(const Curve& curve) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : curve.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mean_true_goal_probability", b.mean_p_true},
                    {"mean_uniform_baseline", b.mean_p_uniform}});
  }
  return {{"count", curve.count},
          {"mean_true_goal_probability", curve.mean_p_true},
          {"mean_uniform_baseline", curve.mean_p_uniform},
          {"late_mean_true_goal_probability", curve.late_mean_p_true},
          {"late_mean_uniform_baseline", curve.late_mean_p_uniform},
          {"bins", bins}};
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json doc;
  doc["curves"] = nlohmann::json::object();
  for (const auto& [id, c] : report.curves) doc["curves"][id] = to_json(c);
  if (!report.oracle_curves.empty()) {
    doc["oracle_curves"] = nlohmann::json::object();
    for (const auto& [id, c] : report.oracle_curves) doc["oracle_curves"][id] = to_json(c);
  }
  doc["latency_ms"] = {{"runs", report.latency.runs},
                       {"median", report.latency.median_ms},
                       {"mean", report.latency.mean_ms},
                       {"max", report.latency.max_ms}};
  doc["groups_without_true_goal"] = report.groups_without_true_goal;
  return doc;
}

std::string summary_text(const EvaluationReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  for (const auto& [id, c] : report.curves) {
    out << id << ": " << c.count << " groups, mean P(true goal) " << c.mean_p_true << " (uniform "
        << c.mean_p_uniform << "), at >= 50% completed " << c.late_mean_p_true << " (uniform "
        << c.late_mean_p_uniform << ")\n";
    out << "  bins:";
    for (const auto& b : c.bins) out << ' ' << (b.count ? b.mean_p_true : 0.0);
    out << '\n';
    const auto it = report.oracle_curves.find(id);
    if (it != report.oracle_curves.end()) {
      out << "  oracle: mean " << it->second.mean_p_true << ", at >= 50% completed " << it->second.late_mean_p_true
          << '\n';
    }
  }
  out << "latency: median " << report.latency.median_ms << " ms, mean " << report.latency.mean_ms << " ms over "
      << report.latency.runs << " runs\n";
  if (report.groups_without_true_goal > 0) {
    out << "groups whose true goal was not generated: " << report.groups_without_true_goal << '\n';
  }
  return out.str();
}

}  // namespace ogrit

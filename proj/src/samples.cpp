#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ogrit/datakit.hpp"
#include "ogrit/inference.hpp"

namespace ogrit {

namespace {

bool same_goal(const Goal& a, const Goal& b) { return a.lane == b.lane && distance(a.location, b.location) < 1.0; }

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& cell, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw ParseError("feature CSV: bad " + what + " value '" + cell + "'");
  }
  return v;
}

}  // namespace

std::map<VehicleId, VehicleOutcome> determine_true_goals(const Recording& recording, const StaticScene& scene,
                                                         int goal_depth) {
  std::map<VehicleId, VehicleOutcome> out;
  std::map<VehicleId, std::vector<Goal>> candidates;
  std::map<VehicleId, std::map<std::size_t, double>> reached;  // candidate index -> first reach time
  std::map<VehicleId, const VehicleState*> last;
  for (const auto& frame : recording.frames) {
    for (const auto& [id, state] : frame.states) {
      if (!out.contains(id)) {
        out[id] = VehicleOutcome{id, frame.time, std::nullopt, 0.0};
        try {
          candidates[id] = generate_goals(state, scene, 2 * goal_depth).goals;
        } catch (const OffMapError&) {
          candidates[id] = {};
        }
      }
      last[id] = &state;
      const auto& goals = candidates[id];
      for (std::size_t g = 0; g < goals.size(); ++g) {
        if (!reached[id].contains(g) && reached_goal(state, goals[g], scene)) reached[id][g] = frame.time;
      }
    }
  }
  for (auto& [id, outcome] : out) {
    const auto& hits = reached[id];
    std::optional<std::size_t> best;
    for (const auto& [g, t] : hits) {
      const double d = distance(candidates[id][g].location, last[id]->position);
      if (!best || d < distance(candidates[id][*best].location, last[id]->position)) best = g;
    }
    if (best) {
      outcome.true_goal = candidates[id][*best];
      outcome.reach_time = hits.at(*best);
    }
  }
  return out;
}

std::vector<Observation> ego_history(const Recording& recording, const StaticScene& scene, VehicleId ego,
                                     double sensor_range, bool reveal_all) {
  std::vector<Observation> out;
  OcclusionOptions opts;
  opts.with_lanes = false;
  for (const auto& frame : recording.frames) {
    if (!frame.states.contains(ego)) continue;
    if (reveal_all) {
      out.push_back({frame.time, ego, frame.states});
      continue;
    }
    const auto occ = compute_occluded_regions(frame.states, scene, ego, sensor_range, opts);
    Observation obs = observable_vehicles(frame.states, ego, occ);
    obs.time = frame.time;
    out.push_back(std::move(obs));
  }
  return out;
}

SampleSet extract_samples(const Recording& recording, const StaticScene& scene, const SampleOptions& options) {
  SampleSet out;
  if (recording.frames.empty()) return out;
  const auto outcomes = determine_true_goals(recording, scene, options.goal_depth);
  for (const auto& [id, o] : outcomes) {
    if (!o.true_goal) ++out.skipped_vehicles;
  }

  // 1 Hz ticks at the frames nearest each whole second
  std::vector<std::size_t> ticks;
  const double t0 = std::ceil(recording.frames.front().time - 1e-9);
  for (double t = t0; t <= recording.frames.back().time + 1e-9; t += 1.0) {
    const std::size_t f = recording.nearest_frame(t);
    if (ticks.empty() || ticks.back() != f) ticks.push_back(f);
  }

  PipelineOptions live;
  live.sensor_range = options.sensor_range;
  live.goal_depth = options.goal_depth;
  PipelineOptions full = live;
  full.reveal_all = true;
  const ModelSet no_models;
  const Pipeline pipe(scene, no_models, live);
  const Pipeline oracle_pipe(scene, no_models, full);

  for (VehicleId ego : recording.vehicle_ids()) {
    const auto history = ego_history(recording, scene, ego, options.sensor_range, false);
    std::vector<Observation> full_history;
    if (options.with_oracle) full_history = ego_history(recording, scene, ego, options.sensor_range, true);
    std::size_t hi = 0;
    for (std::size_t f : ticks) {
      const double t = recording.frames[f].time;
      while (hi < history.size() && history[hi].time <= t + 1e-9) ++hi;
      if (hi == 0 || std::abs(history[hi - 1].time - t) > 1e-9) continue;  // ego absent at this tick
      const std::span<const Observation> hist(history.data(), hi);
      const Observation& now = hist.back();
      std::optional<OccludedRegionSet> occ;
      for (const auto& [target, state] : now.visible) {
        if (target == ego) continue;
        const auto& outcome = outcomes.at(target);
        if (!outcome.true_goal || t > outcome.reach_time + 1e-9) continue;
        GoalSet goals;
        try {
          goals = generate_goals(state, scene, options.goal_depth);
        } catch (const OffMapError&) {
          continue;
        }
        if (!occ) occ = pipe.occlusions_for(now);
        ++out.groups;
        bool has_true = false;
        const double span = outcome.reach_time - outcome.first_time;
        const double fraction = span > 0.0 ? std::clamp((t - outcome.first_time) / span, 0.0, 1.0) : 1.0;
        for (const auto& goal : goals.goals) {
          Sample s;
          s.x = pipe.extractor().extract(hist, target, goal, *occ);
          if (options.with_oracle) {
            const std::span<const Observation> fh(full_history.data(), hi);
            s.oracle_x = oracle_pipe.extractor().extract(fh, target, goal, OccludedRegionSet::none());
          }
          s.y = same_goal(goal, *outcome.true_goal);
          has_true = has_true || s.y;
          s.meta = {recording.scenario_id, recording.episode_id, t, ego, target, goal, fraction};
          out.samples.push_back(std::move(s));
        }
        if (!has_true) ++out.groups_without_true_goal;
      }
    }
  }
  return out;
}

unsigned thread_count() {
  if (const char* env = std::getenv("OGRIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SampleSet extract_samples_all(const std::vector<Recording>& recordings, const StaticScene& scene,
                              const SampleOptions& options) {
  std::vector<SampleSet> parts(recordings.size());
  parallel_for(recordings.size(), [&](std::size_t i) { parts[i] = extract_samples(recordings[i], scene, options); });
  SampleSet out;
  for (auto& p : parts) {
    out.groups += p.groups;
    out.groups_without_true_goal += p.groups_without_true_goal;
    out.skipped_vehicles += p.skipped_vehicles;
    for (auto& s : p.samples) out.samples.push_back(std::move(s));
  }
  return out;
}

std::string samples_to_csv_text(const std::vector<Sample>& samples, bool oracle) {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  std::ostringstream out;
  out << "scenario_id,episode_id,t,ego_id,vehicle_id,goal_type,is_true_goal";
  for (std::size_t f = 0; f < cat.size(); ++f) out << ',' << cat.name(f);
  out << ",fraction_completed,goal_lane,goal_s,goal_x,goal_y\n";
  for (const auto& s : samples) {
    const FeatureVector& x = oracle ? s.oracle_x.value() : s.x;
    const auto& m = s.meta;
    out << m.scenario_id << ',' << m.episode_id << ',' << fmt(m.t) << ',' << m.ego << ',' << m.target << ','
        << to_string(m.goal.type) << ',' << (s.y ? 1 : 0);
    for (std::size_t f = 0; f < cat.size(); ++f) {
      out << ',';
      if (const auto v = x.get(cat, f)) out << fmt(*v);
    }
    out << ',' << fmt(m.fraction) << ',' << m.goal.lane << ',' << fmt(m.goal.lane_s) << ','
        << fmt(m.goal.location.x) << ',' << fmt(m.goal.location.y) << '\n';
  }
  return out.str();
}

void write_feature_csv(const std::vector<Sample>& samples, const std::filesystem::path& path, bool oracle) {
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write " + path.string());
  out << samples_to_csv_text(samples, oracle);
}

std::vector<Sample> samples_from_csv_text(const std::string& text) {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("feature CSV is empty");
  const auto header = split_cells(line);
  const std::size_t n_meta = 7;
  if (header.size() != n_meta + cat.size() + 5) throw ParseError("feature CSV: unexpected column count");
  for (std::size_t f = 0; f < cat.size(); ++f) {
    if (header[n_meta + f] != cat.name(f)) {
      throw ValidationError("feature CSV: unknown feature column '" + header[n_meta + f] + "'");
    }
  }
  std::vector<Sample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_cells(line);
    if (c.size() != header.size()) throw ParseError("feature CSV: row with wrong number of cells");
    Sample s;
    s.meta.scenario_id = c[0];
    s.meta.episode_id = c[1];
    s.meta.t = to_double(c[2], "t");
    s.meta.ego = static_cast<VehicleId>(to_double(c[3], "ego_id"));
    s.meta.target = static_cast<VehicleId>(to_double(c[4], "vehicle_id"));
    s.meta.goal.type = goal_type_from_string(c[5]);
    s.y = c[6] == "1";
    BaseValues base(cat.base_count());
    IndicatorValues ind(cat.missing_count());
    for (std::size_t f = 0; f < cat.base_count(); ++f) {
      if (!c[n_meta + f].empty()) base[f] = to_double(c[n_meta + f], cat.name(f));
    }
    for (std::size_t i = 0; i < cat.missing_count(); ++i) {
      ind[i] = to_double(c[n_meta + cat.base_count() + i], "indicator") > 0.5;
    }
    s.x = assemble(std::move(base), std::move(ind), cat);
    const std::size_t tail = n_meta + cat.size();
    s.meta.fraction = to_double(c[tail], "fraction_completed");
    s.meta.goal.lane = static_cast<LaneId>(to_double(c[tail + 1], "goal_lane"));
    s.meta.goal.lane_s = to_double(c[tail + 2], "goal_s");
    s.meta.goal.location = {to_double(c[tail + 3], "goal_x"), to_double(c[tail + 4], "goal_y")};
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feature CSV " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return samples_from_csv_text(buf.str());
}

SplitPolicy split_policy_from_string(const std::string& name) {
  if (name == "hold-one-out") return SplitPolicy::hold_one_out;
  if (name == "hold-k") return SplitPolicy::hold_k;
  if (name == "ratio") return SplitPolicy::ratio_60_20_20;
  throw ValidationError("unknown split policy '" + name + "' (expected hold-one-out, hold-k or ratio)");
}

EpisodeSplit split_episodes(std::vector<std::string> episodes, SplitPolicy policy, std::uint64_t seed) {
  std::sort(episodes.begin(), episodes.end());
  if (std::adjacent_find(episodes.begin(), episodes.end()) != episodes.end()) {
    throw ValidationError("duplicate episode ids");
  }
  const std::size_t n = episodes.size();
  std::size_t n_test = 0;
  std::size_t n_val = 0;
  switch (policy) {
    case SplitPolicy::hold_one_out:
      n_test = 1;
      n_val = 1;
      break;
    case SplitPolicy::hold_k:
      n_test = 3;
      n_val = 3;
      break;
    case SplitPolicy::ratio_60_20_20:
      n_val = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
      n_test = n_val;
      break;
  }
  if (n < n_test + n_val + 1 || n < 3) {
    throw ValidationError("insufficient episodes (" + std::to_string(n) + ") for split policy");
  }
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws so the permutation does not depend on the library's shuffle
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(episodes[i], episodes[j]);
  }
  EpisodeSplit out;
  out.test.assign(episodes.begin(), episodes.begin() + static_cast<long>(n_test));
  out.val.assign(episodes.begin() + static_cast<long>(n_test), episodes.begin() + static_cast<long>(n_test + n_val));
  out.train.assign(episodes.begin() + static_cast<long>(n_test + n_val), episodes.end());
  for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

std::map<GoalType, Dataset> datasets_by_goal_type(const std::vector<Sample>& samples, bool oracle) {
  std::map<GoalType, Dataset> out;
  for (const auto& s : samples) {
    auto it = out.find(s.meta.goal.type);
    if (it == out.end()) it = out.emplace(s.meta.goal.type, Dataset()).first;
    if (oracle) {
      if (!s.oracle_x) throw ContractViolation("oracle dataset needs full-information feature vectors");
      it->second.add(*s.oracle_x, s.y);
    } else {
      it->second.add(s.x, s.y);
    }
  }
  return out;
}

TrainReport train_models(const std::vector<Sample>& samples, const TrainingConfig& config,
                         std::vector<std::string> training_episodes) {
  TrainReport out;
  out.models.oracle = config.oracle;
  std::sort(training_episodes.begin(), training_episodes.end());
  out.models.training_episodes = std::move(training_episodes);
  auto datasets = datasets_by_goal_type(samples, config.oracle);
  std::vector<GoalType> types;
  for (const auto& [type, data] : datasets) {
    if (data.positives() == 0 || data.negatives() == 0) {
      out.warnings.push_back("goal type " + std::string(to_string(type)) + " skipped: only one class in " +
                             std::to_string(data.size()) + " samples");
      continue;
    }
    types.push_back(type);
  }
  std::vector<GoalTree> trees(types.size());
  parallel_for(types.size(), [&](std::size_t i) { trees[i] = train(datasets.at(types[i]), config, types[i]); });
  for (std::size_t i = 0; i < types.size(); ++i) out.models.trees.emplace(types[i], std::move(trees[i]));
  return out;
}

std::string episode_key(const std::string& scenario_id, const std::string& episode_id) {
  return scenario_id + "/" + episode_id;
}

void write_dataset_dir(const DatasetDir& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_scene(data.scene, dir / "scene.json");
  nlohmann::json doc;
  doc["scenario_id"] = data.scenario_id;
  doc["kind"] = data.kind;
  doc["frame_rate"] = data.frame_rate;
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& rec : data.episodes) {
    const std::string file = rec.episode_id + ".csv";
    write_csv(rec, dir / file);
    eps.push_back({{"episode_id", rec.episode_id}, {"file", file}});
  }
  doc["episodes"] = std::move(eps);
  std::ofstream out(dir / "dataset.json");
  if (!out) throw OgritError("cannot write " + (dir / "dataset.json").string());
  out << doc.dump(1) << '\n';
}

DatasetDir load_dataset_dir(const std::filesystem::path& dir) {
  const auto manifest = dir / "dataset.json";
  std::ifstream in(manifest);
  if (!in) throw ParseError("cannot open " + manifest.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  DatasetDir out;
  try {
    out.scenario_id = doc.at("scenario_id").get<std::string>();
    out.kind = doc.value("kind", "");
    out.frame_rate = doc.at("frame_rate").get<double>();
    out.scene = load_scene(dir / "scene.json");
    for (const auto& e : doc.at("episodes")) {
      out.episodes.push_back(ingest_csv(dir / e.at("file").get<std::string>(), out.frame_rate, out.scenario_id,
                                        e.at("episode_id").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  return out;
}

}  // namespace ogrit

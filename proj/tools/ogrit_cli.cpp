#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ogrit/datakit.hpp"
#include "ogrit/evaluation.hpp"
#include "ogrit/inference.hpp"
#include "ogrit/manifest.hpp"
#include "ogrit/occlusion.hpp"
#include "ogrit/synthetic.hpp"
#include "ogrit/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ogrit;

namespace {

// Reads --config files written as JSON, either flat or with one object per subcommand.
class ConfigJSON : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json doc;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0) doc[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty()) doc[name] = opt->get_default_str();
    }
    return doc.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static void flatten(const json& node, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : node.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      } else if (value.is_boolean()) {
        item.inputs.push_back(value.get<bool>() ? "true" : "false");
      } else {
        item.inputs.push_back(value.is_string() ? value.get<std::string>() : value.dump());
      }
      out.push_back(std::move(item));
    }
  }
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write " + path.string());
  out << text;
}

fs::path manifest_path(const std::string& flag, const fs::path& primary_output, const std::string& command) {
  if (!flag.empty()) return flag;
  if (!primary_output.empty()) return fs::path(primary_output.string() + ".manifest.json");
  return fs::path("ogrit-" + command + ".manifest.json");
}

// `ids` may name episodes plainly or as scenario/episode.
std::vector<Recording> select_episodes(const DatasetDir& data, const std::vector<std::string>& ids) {
  std::vector<Recording> out;
  for (const auto& rec : data.episodes) {
    const std::string key = episode_key(rec.scenario_id, rec.episode_id);
    if (std::find(ids.begin(), ids.end(), rec.episode_id) != ids.end() ||
        std::find(ids.begin(), ids.end(), key) != ids.end()) {
      out.push_back(rec);
    }
  }
  return out;
}

std::vector<std::string> episode_ids(const DatasetDir& data) {
  std::vector<std::string> out;
  for (const auto& rec : data.episodes) out.push_back(rec.episode_id);
  return out;
}

std::vector<std::string> keys_of(const std::vector<Recording>& recs) {
  std::vector<std::string> out;
  for (const auto& rec : recs) out.push_back(episode_key(rec.scenario_id, rec.episode_id));
  return out;
}

struct SplitArgs {
  std::string policy{"hold-one-out"};
  std::uint64_t seed{0};
  std::vector<std::string> episodes;
};

// Episodes of one dataset in the requested part of its split, or the explicit list.
std::vector<Recording> split_part(const DatasetDir& data, const SplitArgs& s, bool test, json& record) {
  if (!s.episodes.empty()) return select_episodes(data, s.episodes);
  const EpisodeSplit split = split_episodes(episode_ids(data), split_policy_from_string(s.policy), s.seed);
  record[data.scenario_id] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
  return select_episodes(data, test ? split.test : split.train);
}

json tree_stats(const ModelSet& models) {
  json out = json::object();
  for (const auto& [type, tree] : models.trees) {
    out[std::string(to_string(type))] = {{"depth", tree.depth()},
                                         {"leaves", tree.leaf_count()},
                                         {"nodes", tree.nodes.size()},
                                         {"training_impurity", pruning_cost(tree, 0.0)},
                                         {"samples", tree.nodes.front().n_g + tree.nodes.front().n_ng}};
  }
  return out;
}

json feature_map(const FeatureVector& x, const FeatureCatalog& cat) {
  json out = json::object();
  for (std::size_t f = 0; f < cat.size(); ++f) {
    const auto v = x.get(cat, f);
    out[cat.name(f)] = v ? json(*v) : json(nullptr);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct MakeDataArgs {
  std::string kind{"t-junction"};
  int episodes{10};
  std::uint64_t seed{0};
  double duration{60.0};
  std::string out;
  std::string manifest;
};

int run_make_data(const MakeDataArgs& a) {
  RunManifest manifest("make-data");
  manifest.set_config({{"kind", a.kind}, {"episodes", a.episodes}, {"duration", a.duration}});
  manifest.set_seed(a.seed);
  const auto start = std::chrono::steady_clock::now();
  const ScenarioKind kind = scenario_kind_from_string(a.kind);
  if (a.episodes < 1) throw ValidationError("--episodes must be at least 1");
  SyntheticOptions opts;
  opts.duration = a.duration;
  auto data = generate_synthetic(kind, a.episodes, a.seed, opts);
  DatasetDir dir;
  dir.scenario_id = data.episodes.empty() ? std::string(to_string(kind)) : data.episodes.front().scenario_id;
  dir.kind = std::string(to_string(kind));
  dir.frame_rate = opts.frame_rate;
  dir.scene = std::move(data.scene);
  dir.episodes = std::move(data.episodes);
  write_dataset_dir(dir, a.out);
  manifest.add_output(a.out);
  manifest.add_timing("total", elapsed_ms(start));
  fs::path out_dir(a.out);
  if (!out_dir.has_filename()) out_dir = out_dir.parent_path();
  // kept beside the dataset so the directory itself stays byte-identical across runs
  manifest.write(manifest_path(a.manifest, out_dir, "make-data"));
  std::cout << "wrote " << dir.episodes.size() << " episodes to " << a.out << '\n';
  return 0;
}

struct OcclusionArgs {
  std::string scene;
  std::string recording;
  double frame_rate{25.0};
  double range{kDefaultSensorRange};
  std::string out;
  std::string manifest;
};

int run_extract_occlusions(const OcclusionArgs& a) {
  RunManifest manifest("extract-occlusions");
  manifest.set_config({{"frame_rate", a.frame_rate}, {"range", a.range}});
  manifest.add_input(a.scene);
  manifest.add_input(a.recording);
  const auto start = std::chrono::steady_clock::now();
  const StaticScene scene = load_scene(a.scene);
  const Recording rec = ingest_csv(a.recording, a.frame_rate, "", fs::path(a.recording).stem().string());
  export_occlusion_dataset(rec, scene, a.range, a.out);
  manifest.add_output(a.out);
  manifest.add_timing("total", elapsed_ms(start));
  manifest.write(manifest_path(a.manifest, a.out, "extract-occlusions"));
  return 0;
}

struct FeatureArgs {
  std::string data;
  std::vector<std::string> episodes;
  double range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  std::string out;
  std::string oracle_out;
  std::string manifest;
};

int run_extract_features(const FeatureArgs& a) {
  RunManifest manifest("extract-features");
  manifest.set_config({{"range", a.range}, {"goal_depth", a.goal_depth}, {"episodes", a.episodes}});
  manifest.add_input(a.data);
  const auto start = std::chrono::steady_clock::now();
  const DatasetDir data = load_dataset_dir(a.data);
  const auto recs = a.episodes.empty() ? data.episodes : select_episodes(data, a.episodes);
  SampleOptions opts{a.range, a.goal_depth, !a.oracle_out.empty()};
  const SampleSet set = extract_samples_all(recs, data.scene, opts);
  write_feature_csv(set.samples, a.out);
  manifest.add_output(a.out);
  if (!a.oracle_out.empty()) {
    write_feature_csv(set.samples, a.oracle_out, true);
    manifest.add_output(a.oracle_out);
  }
  manifest.set_result({{"samples", set.samples.size()},
                       {"groups", set.groups},
                       {"groups_without_true_goal", set.groups_without_true_goal},
                       {"skipped_vehicles", set.skipped_vehicles}});
  manifest.add_timing("total", elapsed_ms(start));
  manifest.write(manifest_path(a.manifest, a.out, "extract-features"));
  std::cout << set.samples.size() << " samples in " << set.groups << " groups (" << set.groups_without_true_goal
            << " without the true goal, " << set.skipped_vehicles << " vehicles skipped)\n";
  return 0;
}

struct TrainArgs {
  std::vector<std::string> data;
  std::string features;
  SplitArgs split;
  TrainingConfig config;
  double range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  std::string out{"model.json"};
  std::string metrics;
  std::string manifest;
};

int run_train(const TrainArgs& a) {
  if (a.data.empty() == a.features.empty()) throw CLI::ValidationError("train", "give --data or --features, not both");
  a.config.validate();
  RunManifest manifest("train");
  manifest.set_config({{"lambda", a.config.lambda},
                       {"max_depth", a.config.max_depth},
                       {"min_samples", a.config.min_samples_leaf},
                       {"alpha", a.config.alpha},
                       {"oracle", a.config.oracle},
                       {"split", a.split.policy},
                       {"episodes", a.split.episodes},
                       {"range", a.range},
                       {"goal_depth", a.goal_depth}});
  manifest.set_seed(a.split.seed);
  const auto start = std::chrono::steady_clock::now();

  std::vector<Sample> samples;
  std::vector<std::string> train_eps;
  json metrics;
  if (!a.data.empty()) {
    json splits = json::object();
    std::size_t groups = 0;
    std::size_t without = 0;
    std::size_t skipped = 0;
    for (const auto& dir : a.data) {
      manifest.add_input(dir);
      const DatasetDir data = load_dataset_dir(dir);
      const auto recs = split_part(data, a.split, false, splits);
      for (auto& k : keys_of(recs)) train_eps.push_back(std::move(k));
      SampleSet set = extract_samples_all(recs, data.scene, SampleOptions{a.range, a.goal_depth, a.config.oracle});
      groups += set.groups;
      without += set.groups_without_true_goal;
      skipped += set.skipped_vehicles;
      for (auto& s : set.samples) samples.push_back(std::move(s));
    }
    if (train_eps.empty()) throw ValidationError("no training episodes selected");
    metrics["split"] = splits;
    metrics["groups"] = groups;
    metrics["groups_without_true_goal"] = without;
    metrics["skipped_vehicles"] = skipped;
  } else {
    manifest.add_input(a.features);
    samples = read_feature_csv(a.features);
    std::set<std::string> eps;
    for (auto& s : samples) {
      eps.insert(episode_key(s.meta.scenario_id, s.meta.episode_id));
      if (a.config.oracle) s.oracle_x = s.x;  // the CSV holds full-information vectors
    }
    train_eps.assign(eps.begin(), eps.end());
  }
  manifest.add_timing("samples", elapsed_ms(start));
  const auto t_train = std::chrono::steady_clock::now();
  const TrainReport report = train_models(samples, a.config, train_eps);
  manifest.add_timing("train", elapsed_ms(t_train));
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';

  save_model(report.models, a.out);
  manifest.add_output(a.out);
  metrics["samples"] = samples.size();
  metrics["training_episodes"] = report.models.training_episodes;
  metrics["trees"] = tree_stats(report.models);
  metrics["warnings"] = report.warnings;
  const fs::path metrics_path =
      a.metrics.empty() ? fs::path(a.out).replace_extension(".metrics.json") : fs::path(a.metrics);
  write_text(metrics_path, metrics.dump(1) + "\n");
  manifest.add_output(metrics_path);
  manifest.add_timing("total", elapsed_ms(start));
  manifest.write(manifest_path(a.manifest, a.out, "train"));
  std::cout << "trained " << report.models.trees.size() << " trees on " << samples.size() << " samples -> " << a.out
            << '\n';
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> data;
  std::string models;
  std::string oracle;
  SplitArgs split;
  double range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  std::size_t latency_runs{200};
  std::string out{"report.json"};
  std::string manifest;
};

int run_evaluate(const EvaluateArgs& a) {
  RunManifest manifest("evaluate");
  manifest.set_config({{"split", a.split.policy}, {"episodes", a.split.episodes}, {"range", a.range},
                       {"goal_depth", a.goal_depth}, {"latency_runs", a.latency_runs}});
  manifest.set_seed(a.split.seed);
  manifest.add_input(a.models);
  const auto start = std::chrono::steady_clock::now();
  const ModelSet models = load_model(a.models);
  std::optional<ModelSet> oracle;
  if (!a.oracle.empty()) {
    manifest.add_input(a.oracle);
    oracle = load_model(a.oracle);
    if (!oracle->oracle) throw ValidationError(a.oracle + " is not an oracle model");
  }

  std::vector<GroupScore> scores;
  std::vector<GroupScore> oracle_scores;
  std::vector<std::string> test_keys;
  json splits = json::object();
  EvaluationReport report;
  PipelineOptions popts;
  popts.sensor_range = a.range;
  popts.goal_depth = a.goal_depth;
  for (const auto& dir : a.data) {
    manifest.add_input(dir);
    const DatasetDir data = load_dataset_dir(dir);
    const auto recs = split_part(data, a.split, true, splits);
    const auto keys = keys_of(recs);
    check_split(models, keys);
    if (oracle) check_split(*oracle, keys);
    test_keys.insert(test_keys.end(), keys.begin(), keys.end());
    const SampleSet set = extract_samples_all(recs, data.scene, SampleOptions{a.range, a.goal_depth, oracle.has_value()});
    report.groups_without_true_goal += set.groups_without_true_goal;
    for (auto& g : score_groups(set.samples, models)) scores.push_back(std::move(g));
    if (oracle) {
      for (auto& g : score_groups(set.samples, *oracle, true)) oracle_scores.push_back(std::move(g));
    }
    // latency is reported for the last dataset given
    report.latency = measure_latency(recs, data.scene, models, popts, a.latency_runs);
  }
  if (test_keys.empty()) throw ValidationError("no test episodes selected");
  report.curves = curves_by_scenario(scores);
  if (oracle) report.oracle_curves = curves_by_scenario(oracle_scores);
  manifest.add_timing("total", elapsed_ms(start));

  json doc = to_json(report);
  doc["test_episodes"] = test_keys;
  if (!splits.empty()) doc["split"] = splits;
  write_text(a.out, doc.dump(1) + "\n");
  const std::string summary = summary_text(report);
  const fs::path summary_path = fs::path(a.out).replace_extension(".txt");
  write_text(summary_path, summary);
  std::cout << summary;
  manifest.add_output(a.out);
  manifest.add_output(summary_path);
  manifest.write(manifest_path(a.manifest, a.out, "evaluate"));
  return 0;
}

struct InferArgs {
  std::string scene;
  std::string models;
  std::string recording;
  double frame_rate{25.0};
  VehicleId ego{0};
  VehicleId target{0};
  double t{0.0};
  double range{kDefaultSensorRange};
  int goal_depth{kDefaultGoalDepth};
  std::string manifest;
};

int run_infer(const InferArgs& a) {
  RunManifest manifest("infer");
  manifest.set_config({{"ego", a.ego}, {"target", a.target}, {"t", a.t}, {"range", a.range},
                       {"frame_rate", a.frame_rate}});
  manifest.add_input(a.scene);
  manifest.add_input(a.models);
  manifest.add_input(a.recording);
  const StaticScene scene = load_scene(a.scene);
  const ModelSet models = load_model(a.models);
  const Recording rec = ingest_csv(a.recording, a.frame_rate);
  const double t = rec.frames.at(rec.nearest_frame(a.t)).time;
  auto history = ego_history(rec, scene, a.ego, a.range, models.oracle);
  while (!history.empty() && history.back().time > t + 1e-9) history.pop_back();
  if (history.empty() || std::abs(history.back().time - t) > 1e-9) {
    throw OgritError("ego " + std::to_string(a.ego) + " is not present at t = " + std::to_string(t));
  }
  if (!history.back().find(a.target)) {
    throw OgritError("target " + std::to_string(a.target) + " is not visible to ego " + std::to_string(a.ego) +
                     " at t = " + std::to_string(t));
  }
  PipelineOptions opts;
  opts.sensor_range = a.range;
  opts.goal_depth = a.goal_depth;
  opts.reveal_all = models.oracle;
  const Pipeline pipe(scene, models, opts);
  PipelineTiming timing;
  const GoalPosterior post = pipe.run(history, a.target, &timing);
  for (const auto& e : post.entries) {
    json line = {{"t", post.time},
                 {"vehicle", post.vehicle},
                 {"goal_type", to_string(e.goal.type)},
                 {"goal_lane", e.goal.lane},
                 {"goal_x", e.goal.location.x},
                 {"goal_y", e.goal.location.y},
                 {"prior", e.prior},
                 {"likelihood", e.likelihood},
                 {"posterior", e.posterior}};
    std::cout << line.dump() << '\n';
  }
  manifest.add_timing("occlusion", timing.occlusion_ms);
  manifest.add_timing("goals", timing.goals_ms);
  manifest.add_timing("features", timing.features_ms);
  manifest.add_timing("trees", timing.trees_ms);
  manifest.add_timing("total", timing.total_ms);
  manifest.write(manifest_path(a.manifest, {}, "infer"));
  return 0;
}

struct VerifyArgs {
  std::string models;
  std::string prop;
  int builtin{0};
  std::string emit_smt;
  std::string manifest;
};

int run_verify(const VerifyArgs& a) {
  if (a.prop.empty() == (a.builtin == 0)) throw CLI::ValidationError("verify", "give exactly one of --prop or --builtin");
  RunManifest manifest("verify");
  manifest.set_config({{"builtin", a.builtin}});
  manifest.add_input(a.models);
  if (!a.prop.empty()) manifest.add_input(a.prop);
  const auto start = std::chrono::steady_clock::now();
  const ModelSet models = load_model(a.models);
  const Proposition prop = a.prop.empty() ? builtin_proposition(a.builtin) : load_proposition(a.prop, models.catalog);
  const VerificationResult result = check(models, prop);
  manifest.add_timing("check", elapsed_ms(start));
  json out = {{"proposition", prop.name}, {"verdict", result.verified ? "verified" : "refuted"},
              {"regions", result.regions}};
  std::cout << (result.verified ? "verified" : "refuted") << '\n';
  if (!result.verified) {
    json cex = json::array();
    for (std::size_t i = 0; i < result.counterexample->size(); ++i) {
      json inst = json::object();
      for (std::size_t k = 0; k < prop.goals.size(); ++k) {
        inst[std::string(to_string(prop.goals[k]))] = feature_map((*result.counterexample)[i][k], models.catalog);
      }
      cex.push_back(inst);
    }
    out["counterexample"] = cex;
    out["lhs"] = result.value.lhs;
    out["rhs"] = result.value.rhs;
    std::cout << json({{"counterexample", cex}, {"lhs", result.value.lhs}, {"rhs", result.value.rhs}}).dump(1)
              << '\n';
  }
  if (!a.emit_smt.empty()) {
    write_smtlib(models, prop, a.emit_smt);
    manifest.add_output(a.emit_smt);
  }
  manifest.set_result(out);
  manifest.write(manifest_path(a.manifest, a.emit_smt, "verify"));
  return 0;
}

void add_split_options(CLI::App* cmd, SplitArgs& s) {
  cmd->add_option("--split", s.policy, "Split policy: hold-one-out, hold-k or ratio")->capture_default_str();
  cmd->add_option("--seed", s.seed, "Split seed")->capture_default_str();
  cmd->add_option("--episodes", s.episodes, "Explicit episode ids instead of a split")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal recognition for vehicles under occlusion"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<ConfigJSON>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: OGRIT_THREADS or all cores)");

  MakeDataArgs md;
  auto* make_data = app.add_subcommand("make-data", "Generate synthetic episodes");
  make_data->add_option("--kind", md.kind, "t-junction or roundabout")->capture_default_str();
  make_data->add_option("--episodes", md.episodes, "Number of episodes")->capture_default_str();
  make_data->add_option("--seed", md.seed, "Random seed")->capture_default_str();
  make_data->add_option("--duration", md.duration, "Seconds per episode")->capture_default_str();
  make_data->add_option("--out", md.out, "Output directory")->required();
  make_data->add_option("--manifest", md.manifest, "Run manifest path");

  OcclusionArgs oc;
  auto* occl = app.add_subcommand("extract-occlusions", "Occluded regions for every (frame, ego)");
  occl->add_option("--scene", oc.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  occl->add_option("--recording", oc.recording, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  occl->add_option("--frame-rate", oc.frame_rate, "Recording frame rate (Hz)")->capture_default_str();
  occl->add_option("--range", oc.range, "Sensor range (m)")->capture_default_str();
  occl->add_option("--out", oc.out, "Output JSON")->required();
  occl->add_option("--manifest", oc.manifest, "Run manifest path");

  FeatureArgs fa;
  auto* feats = app.add_subcommand("extract-features", "Write the feature CSV for a dataset");
  feats->add_option("--data", fa.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  feats->add_option("--episodes", fa.episodes, "Episode ids (default: all)")->delimiter(',');
  feats->add_option("--range", fa.range, "Sensor range (m)")->capture_default_str();
  feats->add_option("--goal-depth", fa.goal_depth, "Goal search depth")->capture_default_str();
  feats->add_option("--out", fa.out, "Feature CSV")->required();
  feats->add_option("--oracle-out", fa.oracle_out, "Full-information feature CSV");
  feats->add_option("--manifest", fa.manifest, "Run manifest path");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one tree per goal type");
  train_cmd->add_option("--data", ta.data, "Dataset directories")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--features", ta.features, "Feature CSV instead of a dataset")->check(CLI::ExistingFile);
  add_split_options(train_cmd, ta.split);
  train_cmd->add_option("--lambda", ta.config.lambda, "Lookahead and pruning penalty")->capture_default_str();
  train_cmd->add_option("--max-depth", ta.config.max_depth, "Maximum tree depth")->capture_default_str();
  train_cmd->add_option("--min-samples", ta.config.min_samples_leaf, "Minimum samples per leaf")->capture_default_str();
  train_cmd->add_option("--alpha", ta.config.alpha, "Likelihood smoothing")->capture_default_str();
  train_cmd->add_flag("--oracle", ta.config.oracle, "Train on full-information features");
  train_cmd->add_option("--range", ta.range, "Sensor range (m)")->capture_default_str();
  train_cmd->add_option("--goal-depth", ta.goal_depth, "Goal search depth")->capture_default_str();
  train_cmd->add_option("--out", ta.out, "Model JSON")->capture_default_str();
  train_cmd->add_option("--metrics", ta.metrics, "Per-tree statistics JSON");
  train_cmd->add_option("--manifest", ta.manifest, "Run manifest path");

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "True-goal probability curves and latency");
  eval_cmd->add_option("--data", ea.data, "Dataset directories")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--models", ea.models, "Model JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--oracle", ea.oracle, "Oracle model JSON")->check(CLI::ExistingFile);
  add_split_options(eval_cmd, ea.split);
  eval_cmd->add_option("--range", ea.range, "Sensor range (m)")->capture_default_str();
  eval_cmd->add_option("--goal-depth", ea.goal_depth, "Goal search depth")->capture_default_str();
  eval_cmd->add_option("--latency-runs", ea.latency_runs, "Timed pipeline runs")->capture_default_str();
  eval_cmd->add_option("--out", ea.out, "Report JSON")->capture_default_str();
  eval_cmd->add_option("--manifest", ea.manifest, "Run manifest path");

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Goal posterior for one target");
  infer_cmd->add_option("--scene", ia.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--models", ia.models, "Model JSON")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--recording", ia.recording, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--frame-rate", ia.frame_rate, "Recording frame rate (Hz)")->capture_default_str();
  infer_cmd->add_option("--ego", ia.ego, "Ego vehicle id")->required();
  infer_cmd->add_option("--target", ia.target, "Target vehicle id")->required();
  infer_cmd->add_option("--t", ia.t, "Time (s)")->required();
  infer_cmd->add_option("--range", ia.range, "Sensor range (m)")->capture_default_str();
  infer_cmd->add_option("--goal-depth", ia.goal_depth, "Goal search depth")->capture_default_str();
  infer_cmd->add_option("--manifest", ia.manifest, "Run manifest path");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Check a proposition against trained trees");
  verify_cmd->add_option("--models", va.models, "Model JSON")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--prop", va.prop, "Proposition JSON")->check(CLI::ExistingFile);
  verify_cmd->add_option("--builtin", va.builtin, "Built-in proposition 1, 2 or 3")->check(CLI::Range(1, 3));
  verify_cmd->add_option("--emit-smt", va.emit_smt, "Write an SMT-LIB script");
  verify_cmd->add_option("--manifest", va.manifest, "Run manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }
  if (threads > 0) setenv("OGRIT_THREADS", std::to_string(threads).c_str(), 1);

  try {
    if (*make_data) return run_make_data(md);
    if (*occl) return run_extract_occlusions(oc);
    if (*feats) return run_extract_features(fa);
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_evaluate(ea);
    if (*infer_cmd) return run_infer(ia);
    if (*verify_cmd) return run_verify(va);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
